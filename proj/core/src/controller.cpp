#include "defgrasp/controller.hpp"

#include <algorithm>
#include <cmath>

namespace defgrasp {

double lowpass_update(ForceFilter& filter, double raw) {
  if (!(filter.alpha > 0.0 && filter.alpha <= 1.0)) {
    throw ConfigError("filter alpha must lie in (0, 1]");
  }
  filter.state = filter.alpha * raw + (1.0 - filter.alpha) * filter.state;
  return filter.state;
}

double force_controller(double filtered_force, double target, const PIGains& gains,
                        double& integral, double dt) {
  const double e = target - filtered_force;
  if (dt > 0.0) integral = std::clamp(integral + gains.ki * e * dt, 0.0, gains.max_force);
  return std::clamp(gains.kp * e + integral, 0.0, gains.max_force);
}

double target_force(double mass, double mu, double g) {
  if (!(mu > 0.0)) throw ConfigError("target_force: friction coefficient must be positive");
  return 1.3 * mass * g / mu;
}

ForceController::ForceController(const ControllerSettings& settings, double target)
    : settings_(settings), target_(target), integral_{target, target} {
  if (!(target > 0.0)) throw ConfigError("target grasp force must be positive");
  for (ForceFilter& f : filters_) f.alpha = settings.filter_alpha;
}

void ForceController::set_target(double target) {
  if (!(target > 0.0)) throw ConfigError("target grasp force must be positive");
  for (double& i : integral_) i += target - target_;
  target_ = target;
}

std::array<double, 2> ForceController::update(const std::array<double, 2>& raw,
                                              const std::array<bool, 2>& in_contact,
                                              double dt) {
  std::array<double, 2> drive{};
  for (int f = 0; f < 2; ++f) {
    const double filtered = lowpass_update(filters_[f], raw[f]);
    // Integrate only once the finger touches; before that the feedforward
    // integral closes the finger.
    drive[f] =
        force_controller(filtered, target_, settings_.gains, integral_[f], in_contact[f] ? dt : 0.0);
  }
  return drive;
}

bool ForceController::within_band() const {
  for (const ForceFilter& f : filters_) {
    if (std::abs(f.state - target_) > settings_.band * target_) return false;
  }
  return true;
}

namespace {

// Runs the closed loop until the band is held, the budget is exhausted, or
// the fingers close completely without touching anything.
bool run_loop(GraspSimulation& sim, ForceController& ctrl, const ControllerSettings& settings,
              SqueezeTelemetry& tel) {
  GripperState& g = sim.gripper();
  const double dt = sim.dt();
  const double start = sim.time();
  double in_band = 0.0;
  std::array<double, 2> raw{sim.normal_force(0), sim.normal_force(1)};
  std::array<bool, 2> touching{sim.contact_count(0) > 0, sim.contact_count(1) > 0};
  while (sim.time() - start < settings.time_budget - 0.5 * dt) {
    g.drive_force = ctrl.update(raw, touching, dt);
    sim.step();
    ++tel.steps;
    raw = {sim.normal_force(0), sim.normal_force(1)};
    touching = {sim.contact_count(0) > 0, sim.contact_count(1) > 0};
    if (touching[0] && touching[1] && std::isnan(tel.separation_at_first_contact)) {
      tel.separation_at_first_contact = g.separation();
      tel.first_contact_time = sim.time();
    }
    if (!touching[0] && !touching[1] && g.separation() <= 1e-9) {
      tel.reason = "fingers closed without contact";
      return false;
    }
    // Feed the latest measurement through the filter before testing the band.
    in_band = (ctrl.within_band() && touching[0] && touching[1]) ? in_band + dt : 0.0;
    if (in_band >= settings.hold_time - 0.5 * dt) {
      tel.converged = true;
      tel.separation_at_convergence = g.separation();
      tel.convergence_time = sim.time();
      return true;
    }
  }
  tel.reason = std::isnan(tel.separation_at_first_contact)
                   ? "no contact within time budget"
                   : "grasp force did not converge within time budget";
  return false;
}

}  // namespace

SqueezeTelemetry squeeze_to_force(GraspSimulation& sim, const GraspCandidate& grasp,
                                  double target, const ControllerSettings& settings,
                                  ForceController* controller_out) {
  sim.place_gripper(grasp);
  sim.contact().fingers.damping = target / settings.approach_speed;
  SqueezeTelemetry tel;
  tel.initial_separation = sim.gripper().separation();
  ForceController ctrl(settings, target);
  run_loop(sim, ctrl, settings, tel);
  if (controller_out) *controller_out = ctrl;
  return tel;
}

bool regulate_force(GraspSimulation& sim, ForceController& controller, double target,
                    const ControllerSettings& settings) {
  controller.set_target(target);
  SqueezeTelemetry tel;
  tel.separation_at_first_contact = sim.gripper().separation();
  return run_loop(sim, controller, settings, tel);
}

}  // namespace defgrasp
