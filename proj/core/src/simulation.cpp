#include "defgrasp/simulation.hpp"

namespace defgrasp {

namespace {

double normal_stiffness(const TetMesh& mesh, const ElasticParams& params,
                        const ContactSettings& contact) {
  return contact.stiffness_scale * params.youngs_modulus * mesh.mean_surface_edge();
}

}  // namespace

GraspSimulation::GraspSimulation(std::shared_ptr<const TetMesh> mesh, ElasticParams params,
                                 double mu, SimulationSettings settings)
    : settings_(settings),
      integrator_(mesh, params, settings.integrator),
      contact_(mesh, mu, normal_stiffness(*mesh, params, settings.contact),
               settings.contact.tangential_ratio *
                   normal_stiffness(*mesh, params, settings.contact),
               settings.contact.margin, settings.contact.min_slip_width),
      state_(SimState::at_rest(*mesh)) {
  if (!(settings.dt > 0.0)) throw ConfigError("dt must be positive");
  if (mu < 0.0) throw ConfigError("friction coefficient must be non-negative");
  contact_.gripper.pad = settings.pad;
  contact_.gripper.max_half_travel = settings.max_half_travel;
  contact_.fingers.mass = settings.finger_mass;
  contact_.plane.height = mesh->bounds_min().z();
  last_plane_height_ = contact_.plane.height;
}

void GraspSimulation::place_gripper(const GraspCandidate& grasp) {
  GripperState& g = contact_.gripper;
  g.pose = grasp.pose;
  g.pose.orientation.normalize();
  const double h = std::min(0.5 * grasp.initial_separation, g.max_half_travel);
  g.half_separation = {h, h};
  g.finger_speed = {0.0, 0.0};
  g.drive_force = {0.0, 0.0};
  g.frozen = false;
  contact_.plane.height = mesh().bounds_min().z();
  contact_.plane.enabled = true;
  contact_.reset_anchors();
  last_pose_ = g.pose;
  last_plane_height_ = contact_.plane.height;
}

Vec3 GraspSimulation::gravity_vector() const {
  return gravity_enabled ? Vec3(0.0, 0.0, -settings_.gravity) : Vec3::Zero();
}

StepReport GraspSimulation::step() {
  StepReport report;
  const RigidTransform target_pose = contact_.gripper.pose;
  const double target_height = contact_.plane.height;
  const SimState saved_state = state_;
  const GripperContact saved_contact = contact_;
  StepInputs in;
  in.dt = settings_.dt;
  in.gravity = gravity_vector();
  try {
    report = integrator_.step(state_, in, &contact_);
  } catch (const NewtonDivergenceError&) {
    if (settings_.max_refinements <= 0) throw;
    state_ = saved_state;
    contact_ = saved_contact;
    ++refined_steps_;
    advance(settings_.dt, 1);
  }
  contact_.gripper.pose = target_pose;
  contact_.plane.height = target_height;
  last_pose_ = target_pose;
  last_plane_height_ = target_height;
  return report;
}

void GraspSimulation::advance(double dt, int depth) {
  // Two half steps; kinematic inputs are interpolated from the last accepted
  // values to the requested end-of-step values.
  const RigidTransform from_pose = last_pose_;
  const double from_height = last_plane_height_;
  const RigidTransform to_pose = contact_.gripper.pose;
  const double to_height = contact_.plane.height;
  const double h = 0.5 * dt;
  for (int half = 1; half <= 2; ++half) {
    const double a = 0.5 * half;
    RigidTransform pose;
    pose.position = (1.0 - a) * from_pose.position + a * to_pose.position;
    pose.orientation = from_pose.orientation.slerp(a, to_pose.orientation);
    contact_.gripper.pose = pose;
    contact_.plane.height = (1.0 - a) * from_height + a * to_height;
    const SimState saved_state = state_;
    const GripperContact saved_contact = contact_;
    StepInputs in;
    in.dt = h;
    in.gravity = gravity_vector();
    try {
      integrator_.step(state_, in, &contact_);
      last_pose_ = pose;
      last_plane_height_ = contact_.plane.height;
    } catch (const NewtonDivergenceError&) {
      if (depth >= settings_.max_refinements) throw;
      state_ = saved_state;
      contact_ = saved_contact;
      advance(h, depth + 1);
    }
    // Restore the final target for the next half.
    contact_.gripper.pose = to_pose;
    contact_.plane.height = to_height;
  }
}

int GraspSimulation::contact_count(int finger) const {
  int n = 0;
  for (const ContactPoint& c : contact_.contacts()) n += c.finger == finger;
  return n;
}

double GraspSimulation::normal_force(int finger) const {
  double f = 0.0;
  for (const ContactPoint& c : contact_.contacts()) {
    if (c.finger == finger) f += c.normal_force();
  }
  return f;
}

bool GraspSimulation::all_sliding(int finger) const {
  bool any = false;
  for (const ContactPoint& c : contact_.contacts()) {
    if (c.finger != finger) continue;
    if (!c.sliding) return false;
    any = true;
  }
  return any;
}

Vec3 GraspSimulation::center_of_mass() const {
  const auto& m = mesh().node_masses();
  Vec3 c = Vec3::Zero();
  for (int i = 0; i < mesh().num_nodes(); ++i) c += m[i] * state_.positions.col(i);
  return c / mesh().total_mass();
}

}  // namespace defgrasp
