#pragma once

#include <optional>
#include <span>
#include <vector>

#include "defgrasp/fem.hpp"

namespace defgrasp {

/// Performance measures of one grasp. Fields of experiments that did not run,
/// or whose result is undefined (e.g. stress after a failed pickup), are empty.
struct MetricRecord {
  std::optional<bool> pickup_success;
  std::optional<double> max_stress;          // Pa
  std::optional<double> max_deformation;     // m
  std::optional<double> strain_energy;       // J
  std::optional<double> linear_instability;  // m/s^2
  std::optional<double> angular_instability; // rad/s^2
  std::optional<double> deformation_controllability;  // m
  std::optional<int> censored_dirs;  // acceleration experiments only
};

/// Largest element von Mises stress of the stored stress field.
double max_von_mises_over_elements(const SimState& state);

struct DeformationField {
  Positions displacement;  // post - (R pre + t), per node
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  bool degenerate = false;  // collinear input: translation only
};

/// Removes the best-fit rigid motion (uniform weights, Kabsch with reflection
/// guard) from post - pre. Throws Error on size mismatch.
DeformationField deformation_field(const Positions& pre, const Positions& post);

/// Largest nodal displacement norm.
double max_deformation(const Positions& field);

/// Mean of the per-direction loss accelerations. Entries that never lost
/// contact (non-finite or above the limit) count as the limit.
double instability(std::span<const double> loss_accelerations, double limit);

/// Number of entries that reached or exceeded the limit, or never lost contact.
int censored_count(std::span<const double> loss_accelerations, double limit);

struct StateDeformation {
  double max_deformation = 0.0;
  bool failed = false;
};

/// Largest deformation over the successful states; empty if none succeeded.
std::optional<double> deformation_controllability(std::span<const StateDeformation> states);

}  // namespace defgrasp
