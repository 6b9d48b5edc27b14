#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "defgrasp/features.hpp"
#include "defgrasp/mesh_gen.hpp"
#include "test_support.hpp"

using namespace defgrasp;

namespace {

ContactPoint contact_at(int finger, const Vec3& p, int node) {
  ContactPoint c;
  c.finger = finger;
  c.position = p;
  c.node = node;
  return c;
}

SqueezeTelemetry converged(double first_contact_sep) {
  SqueezeTelemetry t;
  t.converged = true;
  t.separation_at_first_contact = first_contact_sep;
  return t;
}

}  // namespace

TEST(Features, PatchCenter) {
  EXPECT_FALSE(contact_patch_center({}).has_value());
  const std::vector<ContactPoint> cs = {contact_at(0, Vec3(1, 0, 0), 0), contact_at(0, Vec3(0, 2, 0), 1)};
  EXPECT_LT((*contact_patch_center(cs) - Vec3(0.5, 1, 0)).norm(), 1e-15);
}

TEST(Features, VertexAreasSumToSurfaceArea) {
  const TetMesh m = gen::box(Vec3(0.04, 0.03, 0.02), 3, 2, 2, 1000.0);
  double sum = 0.0;
  for (double a : surface_vertex_areas(m)) sum += a;
  EXPECT_NEAR(sum, 2 * (0.04 * 0.03 + 0.04 * 0.02 + 0.03 * 0.02), 1e-15);
}

TEST(Features, HandComputedGeometry) {
  auto mesh = test::small_cube();
  GripperState g;
  g.pose = test::centered_cube_grasp().pose;  // squeeze +x, approach -z
  g.half_separation = {0.019, 0.019};
  // Finger 0 patch at x = -0.019, centered 5 mm below the gripper origin in
  // world z; finger 1 patch offset 3 mm in world y.
  const std::vector<ContactPoint> cs = {
      contact_at(0, Vec3(-0.019, 0.0, 0.012), 0), contact_at(0, Vec3(-0.019, 0.0, 0.018), 1),
      contact_at(1, Vec3(0.019, 0.003, 0.02), 2),
  };
  const Vec3 com(0.0, 0.0, 0.02);
  const FeatureRecord f = compute_features(*mesh, g, cs, converged(0.04), com, 9);
  EXPECT_EQ(f.grasp_id, 9);
  EXPECT_TRUE(f.valid);
  EXPECT_NEAR(f.gripper_sep, 0.038, 1e-15);
  EXPECT_NEAR(f.squeeze_dist, 0.002, 1e-15);
  EXPECT_NEAR(f.num_contacts, 1.5, 1e-15);
  const double pure0 = Vec3(0.019, 0.0, 0.005).norm(), pure1 = Vec3(-0.019, -0.003, 0.0).norm();
  EXPECT_NEAR(f.pure_dist, 0.5 * (pure0 + pure1), 1e-15);
  EXPECT_NEAR(f.perp_dist, 0.5 * (0.005 + 0.003), 1e-15);
  // Pad approach coordinate is -(z - 0.02): finger 0 at +0.005, finger 1 at 0.
  EXPECT_NEAR(f.edge_dist, 0.5 * ((0.02 - 0.005) + 0.02), 1e-15);
  // Finger 0 inward normal is +x: perpendicular to gravity.
  EXPECT_NEAR(f.grav_align, std::numbers::pi / 2, 1e-12);
  EXPECT_GT(f.contact_area, 0.0);
}

TEST(Features, GravityAlignmentOfVerticalSqueeze) {
  auto mesh = test::small_cube();
  GripperState g;
  // Squeeze axis along +z: finger 0 sits below and pushes up.
  g.pose.orientation = Quat(Eigen::AngleAxisd(-std::numbers::pi / 2, Vec3::UnitY()));
  const std::vector<ContactPoint> cs = {contact_at(0, Vec3(0, 0, 0), 0), contact_at(1, Vec3(0, 0, 0.04), 1)};
  const FeatureRecord f = compute_features(*mesh, g, cs, converged(0.08), Vec3(0, 0, 0.02));
  EXPECT_NEAR(f.grav_align, 0.0, 1e-7);
}

TEST(Features, InvalidWhenAFingerHasNoContacts) {
  auto mesh = test::small_cube();
  GripperState g;
  const std::vector<ContactPoint> cs = {contact_at(1, Vec3(0.02, 0, 0.02), 0)};
  const FeatureRecord f = compute_features(*mesh, g, cs, converged(0.08), Vec3(0, 0, 0.02));
  EXPECT_FALSE(f.valid);
  EXPECT_FALSE(f.invalid_reason.empty());
}

TEST(Features, RequireConvergedSqueeze) {
  SqueezeTelemetry t;
  t.reason = "no contact";
  EXPECT_THROW(compute_features(*test::small_cube(), GripperState{}, {}, t, Vec3::Zero()), SimulationError);
}

TEST(Features, SqueezeDistanceIsNeverNegative) {
  auto mesh = test::small_cube();
  GripperState g;
  g.half_separation = {0.02, 0.02};
  const std::vector<ContactPoint> cs = {contact_at(0, Vec3(-0.02, 0, 0), 0), contact_at(1, Vec3(0.02, 0, 0), 1)};
  EXPECT_EQ(compute_features(*mesh, g, cs, converged(0.039), Vec3::Zero()).squeeze_dist, 0.0);
}
