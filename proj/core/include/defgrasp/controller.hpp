#pragma once

#include <array>
#include <limits>
#include <string>

#include "defgrasp/simulation.hpp"

namespace defgrasp {

/// First-order low-pass filter on one finger's contact force.
struct ForceFilter {
  double alpha = 0.05;
  double state = 0.0;
};

/// state <- alpha * raw + (1 - alpha) * state. Returns the new state.
double lowpass_update(ForceFilter& filter, double raw);

struct PIGains {
  double kp = 0.5;        // N/N
  double ki = 5.0;        // 1/s
  double max_force = 70.0;  // drive saturation, N
};

/// PI law for one finger: drive = clamp(kp * e + integral, 0, max_force) with
/// e = target - filtered. `integral` is advanced by ki * e * dt and clamped to
/// the same range when dt > 0.
double force_controller(double filtered_force, double target, const PIGains& gains,
                        double& integral, double dt);

/// F_p = 1.3 m g / mu
double target_force(double mass, double mu, double g);

struct ControllerSettings {
  double filter_alpha = 0.05;
  PIGains gains;
  double band = 0.05;          // relative convergence band
  double hold_time = 0.2;      // s inside the band
  double time_budget = 5.0;    // s
  double approach_speed = 0.05;  // sets finger damping to target / speed
};

/// Symmetric two-finger force regulator. The integral starts at the target so
/// free fingers close under the target force until contact is made.
class ForceController {
 public:
  ForceController(const ControllerSettings& settings, double target);

  /// Filters the measured forces and returns the new drive forces.
  std::array<double, 2> update(const std::array<double, 2>& raw,
                               const std::array<bool, 2>& in_contact, double dt);
  void set_target(double target);
  double target() const { return target_; }
  const std::array<ForceFilter, 2>& filters() const { return filters_; }
  bool within_band() const;

 private:
  ControllerSettings settings_;
  double target_;
  std::array<ForceFilter, 2> filters_;
  std::array<double, 2> integral_;
};

struct SqueezeTelemetry {
  bool converged = false;
  std::string reason;
  double initial_separation = 0.0;
  double separation_at_first_contact = std::numeric_limits<double>::quiet_NaN();
  double separation_at_convergence = std::numeric_limits<double>::quiet_NaN();
  double first_contact_time = std::numeric_limits<double>::quiet_NaN();
  double convergence_time = std::numeric_limits<double>::quiet_NaN();
  int steps = 0;
};

/// Places the gripper at `grasp` and closes it under force control until both
/// filtered finger forces stay within the band around `target` for the hold
/// time. Never throws for physical failures: they are reported through
/// `converged` and `reason`. Simulation errors propagate.
SqueezeTelemetry squeeze_to_force(GraspSimulation& sim, const GraspCandidate& grasp,
                                  double target, const ControllerSettings& settings,
                                  ForceController* controller_out = nullptr);

/// Continues force regulation from the current state toward a new target,
/// reusing `controller`. Returns false if the band is not reached in budget.
bool regulate_force(GraspSimulation& sim, ForceController& controller, double target,
                    const ControllerSettings& settings);

}  // namespace defgrasp
