#pragma once

#include <array>
#include <memory>

#include "defgrasp/contact.hpp"
#include "defgrasp/integrator.hpp"

namespace defgrasp {

/// 6-DOF gripper pose (finger midpoint, squeeze axis = local x, approach =
/// local z) and initial finger separation for one grasp.
struct GraspCandidate {
  int id = 0;
  RigidTransform pose;
  double initial_separation = 0.08;
};

struct SimulationSettings {
  double dt = 1.0 / 1500.0;
  double gravity = 9.81;  // m/s^2, acting along -z
  IntegratorSettings integrator;
  ContactSettings contact;
  PadGeometry pad;
  double max_half_travel = 0.04;
  double finger_mass = 0.05;
  int max_refinements = 3;
};

/// One deformable object, one gripper and the support plane, advanced together
/// by the implicit integrator. Copies are independent instances that share only
/// the immutable mesh.
class GraspSimulation {
 public:
  GraspSimulation(std::shared_ptr<const TetMesh> mesh, ElasticParams params, double mu,
                  SimulationSettings settings = {});

  /// Puts the gripper at the grasp pose with fingers open to the initial
  /// separation, and the support plane under the object's rest position.
  void place_gripper(const GraspCandidate& grasp);

  /// Advances by dt. The gripper pose and plane height must already hold
  /// their end-of-step values. A step whose Newton solve fails is retried as
  /// two half steps with interpolated kinematics, down to dt / 2^max_refinements.
  StepReport step();
  int refined_steps() const { return refined_steps_; }

  const TetMesh& mesh() const { return integrator_.mesh(); }
  const std::shared_ptr<const TetMesh>& mesh_ptr() const { return integrator_.mesh_ptr(); }
  const ElasticParams& params() const { return integrator_.params(); }
  const SimulationSettings& settings() const { return settings_; }
  double dt() const { return settings_.dt; }
  double time() const { return state_.time; }

  SimState& state() { return state_; }
  const SimState& state() const { return state_; }
  GripperContact& contact() { return contact_; }
  const GripperContact& contact() const { return contact_; }
  GripperState& gripper() { return contact_.gripper; }
  const GripperState& gripper() const { return contact_.gripper; }
  SupportPlane& plane() { return contact_.plane; }

  bool gravity_enabled = true;
  Vec3 gravity_vector() const;

  int contact_count(int finger) const;
  /// Sum of normal contact force magnitudes on one finger, N.
  double normal_force(int finger) const;
  /// True when the finger has contacts and every one of them is sliding.
  bool all_sliding(int finger) const;
  /// Mass-weighted centroid of the current positions.
  Vec3 center_of_mass() const;

 private:
  SimulationSettings settings_;
  ImplicitIntegrator integrator_;
  GripperContact contact_;
  SimState state_;
  RigidTransform last_pose_;
  double last_plane_height_ = 0.0;
  int refined_steps_ = 0;

  void advance(double dt, int depth);
};

}  // namespace defgrasp
