#include "defgrasp/features.hpp"

#include <algorithm>
#include <cmath>

namespace defgrasp {

std::optional<Vec3> contact_patch_center(std::span<const ContactPoint> contacts) {
  if (contacts.empty()) return std::nullopt;
  Vec3 sum = Vec3::Zero();
  for (const ContactPoint& c : contacts) sum += c.position;
  return sum / static_cast<double>(contacts.size());
}

std::vector<double> surface_vertex_areas(const TetMesh& mesh) {
  std::vector<double> area(mesh.num_nodes(), 0.0);
  for (const Tri& t : mesh.surface_tris()) {
    const Vec3 a = mesh.node(t[0]);
    const double third = (mesh.node(t[1]) - a).cross(mesh.node(t[2]) - a).norm() / 6.0;
    for (int v : t) area[v] += third;
  }
  return area;
}

FeatureRecord compute_features(const TetMesh& mesh, const GripperState& gripper,
                               std::span<const ContactPoint> contacts,
                               const SqueezeTelemetry& telemetry, const Vec3& com, int grasp_id) {
  if (!telemetry.converged) {
    throw SimulationError("features need a converged squeeze: " + telemetry.reason);
  }
  FeatureRecord r;
  r.grasp_id = grasp_id;
  r.gripper_sep = gripper.separation();
  r.squeeze_dist = std::max(0.0, telemetry.separation_at_first_contact - r.gripper_sep);
  r.grav_align = std::acos(std::clamp(gripper.inward_normal(0).dot(Vec3::UnitZ()), -1.0, 1.0));

  const std::vector<double> vertex_area = surface_vertex_areas(mesh);
  for (int f = 0; f < 2; ++f) {
    std::vector<ContactPoint> own;
    for (const ContactPoint& c : contacts) {
      if (c.finger == f) own.push_back(c);
    }
    const auto center = contact_patch_center(own);
    if (!center) {
      r.valid = false;
      r.invalid_reason = "finger " + std::to_string(f) + " has no contacts";
      continue;
    }
    const Vec3 n = gripper.inward_normal(f);
    const Vec3 rel = com - *center;
    r.pure_dist += 0.5 * rel.norm();
    r.perp_dist += 0.5 * (rel - rel.dot(n) * n).norm();
    r.num_contacts += 0.5 * static_cast<double>(own.size());
    // Distal edge sits at +length/2 along the approach axis in pad coordinates.
    const double z = gripper.pad_coords(*center).y();
    r.edge_dist += 0.5 * std::max(0.0, 0.5 * gripper.pad.length - z);
    for (const ContactPoint& c : own) r.contact_area += vertex_area[c.node];
  }
  return r;
}

}  // namespace defgrasp
