#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <span>
#include <vector>

#include "defgrasp/integrator.hpp"

namespace defgrasp {

/// Rectangular finger pad: `width` along the gripper y axis, `length` along the
/// approach (z) axis, `thickness` behind the contact face.
struct PadGeometry {
  double width = 0.02;
  double length = 0.04;
  double thickness = 0.01;
};

/// Generic parallel-jaw gripper. The pose origin is the finger midpoint; the
/// local x axis is the squeeze axis (finger 0 -> finger 1) and z the approach
/// axis, pointing from the gripper base toward the fingertips. Each finger's pad
/// face sits at half_separation[f] from the origin along x.
struct GripperState {
  RigidTransform pose;
  std::array<double, 2> half_separation{0.04, 0.04};
  std::array<double, 2> finger_speed{0.0, 0.0};  // d/dt half_separation
  PadGeometry pad;
  double max_half_travel = 0.04;
  std::array<double, 2> drive_force{0.0, 0.0};  // closing force per finger, N
  bool frozen = false;

  double separation() const { return half_separation[0] + half_separation[1]; }
  Vec3 squeeze_axis() const { return pose.orientation * Vec3::UnitX(); }
  Vec3 width_axis() const { return pose.orientation * Vec3::UnitY(); }
  Vec3 approach_axis() const { return pose.orientation * Vec3::UnitZ(); }
  /// Sign of finger f's offset along the squeeze axis (-1 for finger 0).
  static double side(int finger) { return finger == 0 ? -1.0 : 1.0; }
  Vec3 pad_center(int finger) const {
    return pose.position + side(finger) * half_separation[finger] * squeeze_axis();
  }
  /// Unit normal of finger f's pad pointing toward the other finger.
  Vec3 inward_normal(int finger) const { return -side(finger) * squeeze_axis(); }
  /// In-plane pad coordinates (width, approach) of p relative to the pad center.
  Vec2 pad_coords(const Vec3& p) const {
    const Vec3 q = pose.inverse_apply(p);
    return {q.y(), q.z()};
  }
  /// Penetration of p into finger f's pad half-space (positive inside).
  double penetration(int finger, const Vec3& p) const {
    return -inward_normal(finger).dot(p - pose.position) - half_separation[finger];
  }
};

struct ContactPoint {
  int node = -1;
  int finger = 0;            // 0 or 1; 2 for the support plane
  Vec3 normal = Vec3::Zero();  // unit, pointing from the rigid body into the object
  Vec3 force = Vec3::Zero();   // on the object node, N
  Vec3 position = Vec3::Zero();  // world, m
  Vec2 pad_coords = Vec2::Zero();
  double penetration = 0.0;
  bool sliding = false;

  double normal_force() const { return force.dot(normal); }
  Vec3 tangential_force() const { return force - normal_force() * normal; }
};

/// Horizontal frictional support plane z = height with upward normal.
struct SupportPlane {
  double height = 0.0;
  bool enabled = true;
};

/// Surface nodes penetrating either pad half-space (penetration >= 0) within the
/// pad rectangle expanded by `margin` and no deeper than the pad thickness.
/// Forces are left zero.
std::vector<ContactPoint> detect_contacts(const TetMesh& mesh, const Positions& x,
                                          const GripperState& gripper, double margin);

/// Penalty normal force and Coulomb friction for one contact with relative
/// tangential velocity `relative_velocity` (object minus body). The implied
/// static force k_t * dt * v_t is used while inside the friction cone,
/// otherwise the force slides on the cone boundary.
Vec3 coulomb_contact_force(const Vec3& normal, double penetration, const Vec3& relative_velocity,
                           double mu, double k_n, double dt, double k_t);

/// Per-contact forces, aligned with `contacts`; k_t = k_n.
std::vector<Vec3> contact_forces(std::span<const ContactPoint> contacts,
                                 std::span<const Vec3> relative_velocity, double mu, double k_n,
                                 double dt);

struct ContactSettings {
  double stiffness_scale = 10.0;   // k_n = scale * E * mean surface edge
  double tangential_ratio = 1.0;   // k_t = ratio * k_n
  double margin = 1e-3;            // m
  double min_slip_width = 1e-5;    // m, lower bound on the friction build-up length
};

/// Finger actuator dynamics along the squeeze axis.
struct FingerDynamics {
  double mass = 0.05;     // kg
  double damping = 20.0;  // N s/m
};

/// Penalty contact between the object's surface nodes and the gripper pads
/// and support plane, with elastic-plastic (stick/slip) Coulomb friction. The
/// two finger half-separations are extra unknowns of the implicit solve.
class GripperContact final : public CouplingTerm {
 public:
  GripperContact(std::shared_ptr<const TetMesh> mesh, double mu, double k_n, double k_t,
                 double margin, double min_slip_width = 1e-5);

  GripperState gripper;
  SupportPlane plane;
  FingerDynamics fingers;
  bool contacts_enabled = true;

  int num_extra_dofs() const override { return 2; }
  Eigen::VectorXd extra_values() const override;
  std::vector<bool> extra_fixed() const override;
  void hessian_pattern(int num_nodes, std::vector<std::pair<int, int>>& pairs) const override;
  void begin_step(const Positions& x, double dt) override;
  void begin_iteration(const Positions& x, const Eigen::VectorXd& extra) override;
  bool refine_model(const Positions& x, const Eigen::VectorXd& extra,
                    const Eigen::VectorXd& dir, Eigen::VectorXd& model_grad) override;
  double evaluate(const Positions& x, const Eigen::VectorXd& extra, Eigen::VectorXd* grad,
                  HessianSink* hess, double* force_scale) override;
  void end_step(const Positions& x, const Eigen::VectorXd& extra, double dt) override;

  /// Finger contacts (finger 0/1) at the last converged step.
  const std::vector<ContactPoint>& contacts() const { return contacts_; }
  const std::vector<ContactPoint>& plane_contacts() const { return plane_contacts_; }
  double mu() const { return mu_; }
  void set_mu(double mu) { mu_ = mu; }
  double normal_stiffness() const { return k_n_; }
  /// Clears friction anchors (used when the scene is rearranged).
  void reset_anchors();

 private:
  static constexpr int kBodies = 3;  // finger 0, finger 1, plane
  // Friction spring stretch, in units of the slip width, beyond which a
  // contact counts as sliding and its anchor is dragged along.
  static constexpr double kSlipRatio = 3.0;
  std::size_t slot(int surface_index, int body) const {
    return static_cast<std::size_t>(kBodies * surface_index + body);
  }
  // Penetration and inward normal of point p against body b given finger offsets h.
  double gap(int body, const Vec3& p, const Eigen::VectorXd& h, Vec3& normal) const;
  Vec3 anchor_world(int body, const Vec2& anchor) const;
  Vec2 anchor_local(int body, const Vec3& p) const;
  Mat3 tangent_projector(int body) const;
  // Tangential offset over which friction builds up to the cap.
  double slip_width(double cap) const { return std::max(cap / k_t_, min_slip_width_); }

  std::shared_ptr<const TetMesh> mesh_;
  double mu_;
  double k_n_;
  double k_t_;
  double margin_;
  double min_slip_width_;
  double dt_ = 0.0;
  std::array<double, 2> h_prev_{0.0, 0.0};
  std::array<double, 2> h_pred_{0.0, 0.0};
  std::vector<char> member_;
  std::vector<char> has_anchor_;
  std::vector<char> hess_active_;  // penalty curvature included this iteration
  std::vector<Vec2> anchor_;
  std::vector<double> lambda_;  // normal force at the end of the previous step
  std::vector<ContactPoint> contacts_;
  std::vector<ContactPoint> plane_contacts_;
};

}  // namespace defgrasp
