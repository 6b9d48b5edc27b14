#include "defgrasp/experiments.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace defgrasp {

std::vector<Vec3> direction_set_16() {
  const double s3 = 1.0 / std::sqrt(3.0);
  const double s2 = 1.0 / std::sqrt(2.0);
  const std::vector<Vec3> base = {
      Vec3(0, 0, 1),          Vec3(1, 0, 0),           Vec3(0, 1, 0),
      Vec3(s3, s3, s3),       Vec3(-s3, s3, s3),       Vec3(s3, -s3, s3),
      Vec3(s3, s3, -s3),      Vec3(s2, s2, 0),
  };
  std::vector<Vec3> set = base;
  for (const Vec3& v : base) set.push_back(-v);
  return set;
}

void ExperimentConfig::validate() const {
  for (double v : {lin_jerk, lin_limit, ang_jerk, ang_limit, hold_time, lowering_speed,
                   lowering_distance, reorient_speed}) {
    if (!(v > 0.0)) {
      throw ConfigError("experiment jerks, limits, speeds, lowering distance and hold time must be positive");
    }
  }
  if (settle_time < 0.0 || accel_settle_time < 0.0 ||
      snapshot_stride < 0.0) {
    throw ConfigError("experiment settle times and snapshot stride must be non-negative");
  }
  if (loss_debounce < 1) throw ConfigError("loss debounce must be at least one step");
  if (squeeze_force && !(*squeeze_force > 0.0)) throw ConfigError("squeeze force must be positive");
  for (const auto* set : {&direction_set, &reorient_axes}) {
    for (const Vec3& v : *set) {
      if (std::abs(v.norm() - 1.0) > 1e-9) throw ConfigError("direction vectors must be unit length");
      const bool paired = std::any_of(set->begin(), set->end(),
                                      [&](const Vec3& w) { return (v + w).norm() <= 1e-9; });
      if (!paired) throw ConfigError("direction set must consist of antipodal pairs");
    }
  }
  for (double a : reorient_angles) {
    if (!(a > 0.0)) throw ConfigError("reorientation angles must be positive");
  }
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::FirstContact: return "first_contact";
    case EventKind::ForceConverged: return "force_converged";
    case EventKind::LoadingComplete: return "loading_complete";
    case EventKind::LossOfContact: return "loss_of_contact";
    case EventKind::HoldComplete: return "hold_complete";
  }
  return "unknown";
}

void GraspTrajectory::add_event(double t, EventKind kind) {
  if (!events.empty() && !(t > events.back().time)) {
    throw Error("trajectory event times must be strictly increasing");
  }
  events.push_back({t, kind});
}

bool GraspTrajectory::has_event(EventKind kind) const { return event_time(kind).has_value(); }

std::optional<double> GraspTrajectory::event_time(EventKind kind) const {
  for (const TrajectoryEvent& e : events) {
    if (e.kind == kind) return e.time;
  }
  return std::nullopt;
}

bool LossDetector::update(bool lost) {
  run_ = lost ? run_ + 1 : 0;
  return run_ >= debounce_;
}

namespace {

int steps_for(double duration, double dt) {
  return static_cast<int>(std::ceil(duration / dt - 1e-9));
}

bool finger_lost(const GraspSimulation& sim) {
  return sim.contact_count(0) == 0 || sim.contact_count(1) == 0;
}

bool grip_lost(const GraspSimulation& sim) {
  return finger_lost(sim) || sim.all_sliding(0) || sim.all_sliding(1);
}

void regulate_step(GraspSimulation& sim, ForceController& ctrl) {
  sim.gripper().drive_force = ctrl.update({sim.normal_force(0), sim.normal_force(1)},
                                          {sim.contact_count(0) > 0, sim.contact_count(1) > 0},
                                          sim.dt());
  sim.step();
}

TrajectorySnapshot snapshot_of(const GraspSimulation& sim) {
  return {sim.time(), sim.state(), sim.gripper(), sim.contact().contacts()};
}

// Lowers the plane under force regulation. Returns false on loss of contact.
bool lower_plane(GraspSimulation& sim, ForceController& ctrl, const ExperimentConfig& config,
                 GraspTrajectory* traj, int stride) {
  const double z0 = sim.plane().height;
  const int n = steps_for(config.lowering_distance / config.lowering_speed, sim.dt());
  LossDetector loss(config.loss_debounce);
  for (int k = 1; k <= n; ++k) {
    const double t = k * sim.dt();
    sim.plane().height = z0 - std::min(config.lowering_distance, config.lowering_speed * t);
    regulate_step(sim, ctrl);
    if (traj && stride > 0 && k % stride == 0) traj->snapshots.push_back(snapshot_of(sim));
    if (loss.update(finger_lost(sim))) {
      if (traj) traj->add_event(sim.time(), EventKind::LossOfContact);
      return false;
    }
  }
  return true;
}

int stride_steps(const ExperimentConfig& config, double dt) {
  if (config.snapshot_stride <= 0.0) return 0;
  return std::max(1, static_cast<int>(std::lround(config.snapshot_stride / dt)));
}

void require_converged(const SqueezedGrasp& start) {
  if (!start.telemetry.converged) {
    throw SimulationError("experiment needs a converged squeeze: " + start.telemetry.reason);
  }
}

// Freezes the fingers and removes the support plane.
void freeze(GraspSimulation& sim) {
  sim.gripper().frozen = true;
  sim.gripper().drive_force = {0.0, 0.0};
  sim.plane().enabled = false;
}

void settle(GraspSimulation& sim, double duration) {
  const int n = steps_for(duration, sim.dt());
  for (int k = 0; k < n; ++k) sim.step();
}

}  // namespace

SqueezedGrasp squeeze_grasp(std::shared_ptr<const TetMesh> mesh, const ElasticParams& params,
                            double mu, const GraspCandidate& grasp, const ExperimentConfig& config,
                            const SimulationSettings& settings) {
  const double target = config.squeeze_force.value_or(
      target_force(mesh->total_mass(), mu, settings.gravity));
  SqueezedGrasp out{grasp, GraspSimulation(mesh, params, mu, settings),
                    ForceController(config.controller, target), {}, target, {}};
  out.telemetry = squeeze_to_force(out.sim, grasp, target, config.controller, &out.controller);
  if (!std::isnan(out.telemetry.first_contact_time)) {
    out.squeeze_events.add_event(out.telemetry.first_contact_time, EventKind::FirstContact);
  }
  if (out.telemetry.converged) {
    out.squeeze_events.add_event(out.telemetry.convergence_time, EventKind::ForceConverged);
  }
  return out;
}

bool pickup_success(const GraspTrajectory& trajectory, double hold_time) {
  if (trajectory.has_event(EventKind::LossOfContact)) return false;
  const auto loaded = trajectory.event_time(EventKind::LoadingComplete);
  const auto held = trajectory.event_time(EventKind::HoldComplete);
  return loaded && held && *held - *loaded >= hold_time - 1e-9;
}

PickupResult run_pickup(const SqueezedGrasp& start, const ExperimentConfig& config) {
  require_converged(start);
  GraspSimulation sim = start.sim;
  ForceController ctrl = start.controller;
  PickupResult out;
  out.trajectory = start.squeeze_events;
  const int stride = stride_steps(config, sim.dt());

  bool held = lower_plane(sim, ctrl, config, &out.trajectory, stride);
  if (held) {
    out.trajectory.add_event(sim.time(), EventKind::LoadingComplete);
    const int n = steps_for(config.hold_time, sim.dt());
    LossDetector loss(config.loss_debounce);
    for (int k = 1; k <= n; ++k) {
      regulate_step(sim, ctrl);
      if (stride > 0 && k % stride == 0) out.trajectory.snapshots.push_back(snapshot_of(sim));
      if (loss.update(finger_lost(sim))) {
        out.trajectory.add_event(sim.time(), EventKind::LossOfContact);
        held = false;
        break;
      }
    }
    if (held) out.trajectory.add_event(sim.time(), EventKind::HoldComplete);
  }

  const bool success = pickup_success(out.trajectory, config.hold_time);
  out.metrics.pickup_success = success;
  if (success) {
    out.metrics.max_stress = max_von_mises_over_elements(sim.state());
    out.metrics.max_deformation =
        max_deformation(deformation_field(sim.mesh().nodes(), sim.state().positions).displacement);
    out.metrics.strain_energy =
        strain_energy(sim.state(), sim.mesh(), config.strain_energy_half_factor);
  }
  out.final_state = sim.state();
  out.final_gripper = sim.gripper();
  return out;
}

double patch_extent(const GripperState& gripper, std::span<const ContactPoint> contacts, int finger) {
  std::vector<Vec2> pts;
  for (const ContactPoint& c : contacts) {
    if (c.finger == finger) pts.push_back(gripper.pad_coords(c.position));
  }
  if (pts.size() < 2) return 0.0;
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Vec2 axis = eig.eigenvectors().col(1);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vec2& p : pts) {
    const double s = (p - mean).dot(axis);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return hi - lo;
}

SlipEstimate estimate_F_slip(const GripperState& gripper, std::span<const ContactPoint> contacts,
                             const Vec3& com, double mass, double mu, double g) {
  SlipEstimate out;
  const double fp = target_force(mass, mu, g);
  std::vector<ContactPoint> own[2];
  for (const ContactPoint& c : contacts) {
    if (c.finger == 0 || c.finger == 1) own[c.finger].push_back(c);
  }
  const auto c0 = contact_patch_center(own[0]);
  const auto c1 = contact_patch_center(own[1]);
  if (!c0 || !c1) throw SimulationError("F_slip needs contacts on both fingers");
  Vec3 axis = *c1 - *c0;
  if (axis.norm() <= 1e-12) axis = gripper.squeeze_axis();
  axis.normalize();
  const Vec3 rel = com - *c0;
  out.lever = (rel - rel.dot(axis) * axis).norm();
  out.extent = 0.5 * (patch_extent(gripper, contacts, 0) + patch_extent(gripper, contacts, 1));
  if (!(out.extent > 0.0)) {
    out.zero_extent = true;
    out.force = fp;
    return out;
  }
  out.force = std::max(fp, 1.3 * 2.0 * mass * g * out.lever / (mu * out.extent));
  return out;
}

ReorientationResult run_reorientation(const SqueezedGrasp& start, const ExperimentConfig& config) {
  require_converged(start);
  ReorientationResult out;
  GraspSimulation sim = start.sim;
  ForceController ctrl = start.controller;
  const TetMesh& mesh = sim.mesh();
  out.slip = estimate_F_slip(sim.gripper(), sim.contact().contacts(), mesh.rest_center_of_mass(),
                             mesh.total_mass(), sim.contact().mu(), sim.settings().gravity);
  const double target = std::max(out.slip.force, start.target_force);
  out.force_converged = regulate_force(sim, ctrl, target, config.controller);
  out.pickup_ok = lower_plane(sim, ctrl, config, nullptr, 0);

  std::vector<std::pair<int, double>> plan;
  for (int a = 0; a < static_cast<int>(config.reorient_axes.size()); ++a) {
    for (double angle : config.reorient_angles) plan.emplace_back(a, angle);
  }
  if (config.reorient_control_state) plan.emplace_back(-1, 0.0);

  if (!out.pickup_ok) {
    for (const auto& [axis, angle] : plan) {
      out.states.push_back({axis, angle, true, 0.0, Positions()});
    }
    out.failed_states = static_cast<int>(out.states.size());
    return out;
  }

  freeze(sim);
  settle(sim, config.settle_time);
  const Quat q0 = sim.gripper().pose.orientation;

  std::vector<StateDeformation> summary;
  for (const auto& [axis, angle] : plan) {
    GraspSimulation run = sim;
    LossDetector loss(config.loss_debounce);
    bool failed = finger_lost(run);
    const Vec3 w = axis >= 0 ? config.reorient_axes[axis] : Vec3::UnitZ();
    // Smoothstep profile: peak rate 1.5 * angle / T.
    const int n = angle > 0.0 ? steps_for(1.5 * angle / config.reorient_speed, run.dt()) : 0;
    const int m = steps_for(config.settle_time, run.dt());
    for (int k = 1; k <= n + m && !failed; ++k) {
      const double u = std::min(1.0, static_cast<double>(k) / std::max(n, 1));
      const double s = n > 0 ? u * u * (3.0 - 2.0 * u) : 0.0;
      run.gripper().pose.orientation = (Eigen::AngleAxisd(angle * s, w) * q0).normalized();
      run.step();
      failed = loss.update(finger_lost(run));
    }
    ReorientState st{axis, angle, failed, 0.0, Positions()};
    if (!failed) {
      st.field = deformation_field(mesh.nodes(), run.state().positions).displacement;
      st.max_deformation = max_deformation(st.field);
    } else {
      ++out.failed_states;
    }
    summary.push_back({st.max_deformation, st.failed});
    out.states.push_back(std::move(st));
  }
  out.controllability = deformation_controllability(summary);
  return out;
}

namespace {

enum class RampKind { Linear, Angular };

AccelerationResult run_ramps(const SqueezedGrasp& start, const ExperimentConfig& config,
                             RampKind kind) {
  require_converged(start);
  GraspSimulation sim = start.sim;
  sim.gravity_enabled = false;
  freeze(sim);
  settle(sim, config.accel_settle_time);

  const double jerk = kind == RampKind::Linear ? config.lin_jerk : config.ang_jerk;
  const double limit = kind == RampKind::Linear ? config.lin_limit : config.ang_limit;
  const RigidTransform pose0 = sim.gripper().pose;
  const int n = steps_for(limit / jerk, sim.dt());

  AccelerationResult out;
  for (const Vec3& d : config.direction_set) {
    GraspSimulation run = sim;
    const Vec3 w = pose0.orientation * d;
    LossDetector loss(config.loss_debounce);
    double lost_at = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= n; ++k) {
      const double t = k * run.dt();
      const double travel = jerk * t * t * t / 6.0;
      if (kind == RampKind::Linear) {
        run.gripper().pose.position = pose0.position + travel * w;
      } else {
        run.gripper().pose.orientation = (Eigen::AngleAxisd(travel, w) * pose0.orientation).normalized();
      }
      run.step();
      if (loss.update(grip_lost(run))) {
        // Report the acceleration at the first step of the lost run.
        lost_at = jerk * (k - config.loss_debounce + 1) * run.dt();
        break;
      }
    }
    const bool censored = !(lost_at < limit);
    out.loss.push_back(censored ? limit : lost_at);
    out.censored.push_back(censored);
  }
  out.mean = instability(out.loss, limit);
  out.censored_count = static_cast<int>(std::count(out.censored.begin(), out.censored.end(), true));
  return out;
}

}  // namespace

AccelerationResult run_linear_acceleration(const SqueezedGrasp& start, const ExperimentConfig& config) {
  return run_ramps(start, config, RampKind::Linear);
}

AccelerationResult run_angular_acceleration(const SqueezedGrasp& start, const ExperimentConfig& config) {
  return run_ramps(start, config, RampKind::Angular);
}

}  // namespace defgrasp
