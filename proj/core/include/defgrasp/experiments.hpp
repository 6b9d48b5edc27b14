#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "defgrasp/controller.hpp"
#include "defgrasp/features.hpp"
#include "defgrasp/metrics.hpp"

namespace defgrasp {

/// 8 fixed base directions and their negations: 16 unit vectors in 8
/// antipodal pairs.
std::vector<Vec3> direction_set_16();

struct ExperimentConfig {
  bool pickup = true;
  bool reorient = true;
  bool lin_acc = true;
  bool ang_acc = true;

  double lin_jerk = 1000.0;   // m/s^3
  double lin_limit = 50.0;    // m/s^2
  double ang_jerk = 2500.0;   // rad/s^3
  double ang_limit = 1000.0;  // rad/s^2
  double hold_time = 5.0;     // s
  // Acceleration directions and axes, expressed in the gripper frame.
  std::vector<Vec3> direction_set = direction_set_16();
  // Reorientation axes, world frame.
  std::vector<Vec3> reorient_axes = direction_set_16();
  std::vector<double> reorient_angles = {std::numbers::pi / 4, std::numbers::pi / 2,
                                         3 * std::numbers::pi / 4, std::numbers::pi};
  bool reorient_control_state = false;  // appends an identity rotation

  double lowering_speed = 0.05;          // m/s
  double lowering_distance = 0.1;        // m
  double reorient_speed = std::numbers::pi / 2;  // peak rad/s
  double settle_time = 0.5;              // s after each reorientation
  double accel_settle_time = 0.2;        // s of gravity-free relaxation before ramps
  int loss_debounce = 3;                 // consecutive steps
  double snapshot_stride = 0.1;          // s, 0 disables snapshots
  bool strain_energy_half_factor = true;
  std::optional<double> squeeze_force;   // overrides F_p when set
  ControllerSettings controller;

  /// Throws ConfigError on non-positive limits, jerks or times, or a direction
  /// set that is not made of unit antipodal pairs.
  void validate() const;
};

enum class EventKind {
  FirstContact,
  ForceConverged,
  LoadingComplete,
  LossOfContact,
  HoldComplete,
};

const char* to_string(EventKind kind);

struct TrajectoryEvent {
  double time = 0.0;
  EventKind kind = EventKind::FirstContact;
};

struct TrajectorySnapshot {
  double time = 0.0;
  SimState state;
  GripperState gripper;
  std::vector<ContactPoint> contacts;
};

/// Snapshots and events of one experiment. Times are strictly increasing.
struct GraspTrajectory {
  std::vector<TrajectorySnapshot> snapshots;
  std::vector<TrajectoryEvent> events;

  /// Throws Error if t does not follow the previous event.
  void add_event(double t, EventKind kind);
  bool has_event(EventKind kind) const;
  std::optional<double> event_time(EventKind kind) const;
};

/// Debounced loss-of-contact detector.
class LossDetector {
 public:
  explicit LossDetector(int debounce) : debounce_(debounce) {}
  /// Feeds one step; returns true once `lost` held for `debounce` steps.
  bool update(bool lost);
  int run() const { return run_; }

 private:
  int debounce_;
  int run_ = 0;
};

/// Converged squeeze from which every experiment restarts.
struct SqueezedGrasp {
  GraspCandidate grasp;
  GraspSimulation sim;
  ForceController controller;
  SqueezeTelemetry telemetry;
  double target_force = 0.0;
  GraspTrajectory squeeze_events;
};

/// Squeezes `grasp` to the configured force (F_p unless overridden).
SqueezedGrasp squeeze_grasp(std::shared_ptr<const TetMesh> mesh, const ElasticParams& params,
                            double mu, const GraspCandidate& grasp, const ExperimentConfig& config,
                            const SimulationSettings& settings = {});

struct PickupResult {
  GraspTrajectory trajectory;
  MetricRecord metrics;  // pickup_success, and on success stress, deformation and energy
  SimState final_state;
  GripperState final_gripper;
};

/// True iff the gravity load was completed and contact on both fingers held
/// for `hold_time` afterwards.
bool pickup_success(const GraspTrajectory& trajectory, double hold_time);

/// Lowers the support plane under force regulation, then holds.
PickupResult run_pickup(const SqueezedGrasp& start, const ExperimentConfig& config);

struct SlipEstimate {
  double force = 0.0;  // N
  double lever = 0.0;  // m, center of mass to the grasp axis
  double extent = 0.0; // m, spacing of the two representative contacts
  bool zero_extent = false;
};

/// Grasp force against rotational slip: the two-point torque capacity
/// mu * F * h / 2 must carry 1.3 m g d. Returns max(F_p, 2.6 m g d / (mu h)).
SlipEstimate estimate_F_slip(const GripperState& gripper, std::span<const ContactPoint> contacts,
                             const Vec3& com, double mass, double mu, double g);

/// Extent of one finger's contact patch along its principal in-plane direction.
double patch_extent(const GripperState& gripper, std::span<const ContactPoint> contacts, int finger);

struct ReorientState {
  int axis = -1;  // index into reorient_axes; -1 for the control state
  double angle = 0.0;
  bool failed = false;
  double max_deformation = 0.0;
  Positions field;
};

struct ReorientationResult {
  SlipEstimate slip;
  bool force_converged = false;
  bool pickup_ok = false;
  std::vector<ReorientState> states;
  std::optional<double> controllability;
  int failed_states = 0;
};

/// Regulates to F_slip, picks the object up, freezes the fingers and visits
/// every axis x angle state from the same frozen reference.
ReorientationResult run_reorientation(const SqueezedGrasp& start, const ExperimentConfig& config);

struct AccelerationResult {
  std::vector<double> loss;  // per direction; the limit when censored
  std::vector<bool> censored;
  double mean = 0.0;
  int censored_count = 0;
};

/// Gravity-free ramps a = jerk t along each direction until a finger loses
/// all contact or slides entirely, or the limit is reached.
AccelerationResult run_linear_acceleration(const SqueezedGrasp& start, const ExperimentConfig& config);

/// Same for angular ramps about axes through the finger midpoint.
AccelerationResult run_angular_acceleration(const SqueezedGrasp& start, const ExperimentConfig& config);

}  // namespace defgrasp
