#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "defgrasp/contact.hpp"
#include "defgrasp/controller.hpp"

namespace defgrasp {

/// Pre-pickup grasp descriptors, recorded once the squeeze force is reached.
/// Per-finger quantities are averaged over the two fingers.
struct FeatureRecord {
  int grasp_id = 0;
  double pure_dist = 0.0;     // m, patch center to center of mass
  double perp_dist = 0.0;     // m, center of mass to the line along the finger normal
  double num_contacts = 0.0;  // per finger
  double edge_dist = 0.0;     // m, distal pad edge to patch center
  double squeeze_dist = 0.0;  // m, separation at first contact minus gripper_sep
  double gripper_sep = 0.0;   // m
  double grav_align = 0.0;    // rad, finger-0 inward normal vs world +z
  double contact_area = 0.0;  // m^2, supplementary: rest vertex areas of contact nodes
  bool valid = true;
  std::string invalid_reason;
};

/// Unweighted mean of the contact positions; empty input gives nullopt.
std::optional<Vec3> contact_patch_center(std::span<const ContactPoint> contacts);

/// Rest area attributed to each node: a third of every adjacent surface triangle.
std::vector<double> surface_vertex_areas(const TetMesh& mesh);

/// Computes the descriptors from a converged squeeze. `contacts` holds both
/// fingers' contact points; `com` is the object's center of mass. Throws
/// SimulationError if the squeeze did not converge. A finger without contacts
/// yields a record with valid = false.
FeatureRecord compute_features(const TetMesh& mesh, const GripperState& gripper,
                               std::span<const ContactPoint> contacts,
                               const SqueezeTelemetry& telemetry, const Vec3& com, int grasp_id = 0);

}  // namespace defgrasp
