#include "defgrasp/contact.hpp"

#include <cmath>

namespace defgrasp {

namespace {

bool inside_pad(const GripperState& g, const Vec2& uv, double margin) {
  return std::abs(uv.x()) <= 0.5 * g.pad.width + margin &&
         std::abs(uv.y()) <= 0.5 * g.pad.length + margin;
}

struct FrictionSpring {
  double energy = 0.0;
  Vec3 force = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();
};

// Regularized Coulomb friction for tangential anchor offset u: the force
// -cap * tanh(|u| / w) * u/|u| with w = max(cap / k, w_min) behaves as a
// spring of stiffness cap / w near the anchor and saturates on the friction
// cone. The floor w_min keeps lightly loaded contacts smooth as well.
FrictionSpring friction_spring(const Vec3& u, const Mat3& proj, double cap, double width) {
  FrictionSpring out;
  const double k = cap / width;
  const double un = u.norm();
  const double s = un / width;
  if (s < 1e-8) {
    out.energy = 0.5 * k * un * un;
    out.force = -k * u;
    out.hessian = k * proj;
    return out;
  }
  const double th = std::tanh(s);
  const Vec3 dir = u / un;
  // log cosh(s) evaluated without overflow.
  out.energy = cap * width * (s + std::log1p(std::exp(-2.0 * s)) - std::log(2.0));
  out.force = -cap * th * dir;
  const Mat3 along = dir * dir.transpose();
  out.hessian = k * (1.0 - th * th) * along + (cap * th / un) * (proj - along);
  return out;
}

}  // namespace

std::vector<ContactPoint> detect_contacts(const TetMesh& mesh, const Positions& x,
                                          const GripperState& gripper, double margin) {
  std::vector<ContactPoint> out;
  for (int finger = 0; finger < 2; ++finger) {
    for (int node : mesh.surface_nodes()) {
      const Vec3 p = x.col(node);
      const double depth = gripper.penetration(finger, p);
      if (depth < 0.0 || depth > gripper.pad.thickness) continue;
      const Vec2 uv = gripper.pad_coords(p);
      if (!inside_pad(gripper, uv, margin)) continue;
      ContactPoint c;
      c.node = node;
      c.finger = finger;
      c.normal = gripper.inward_normal(finger);
      c.position = p;
      c.pad_coords = uv;
      c.penetration = depth;
      out.push_back(c);
    }
  }
  return out;
}

Vec3 coulomb_contact_force(const Vec3& normal, double penetration, const Vec3& relative_velocity,
                           double mu, double k_n, double dt, double k_t) {
  if (penetration <= 0.0) return Vec3::Zero();
  const double fn = k_n * penetration;
  const Vec3 vt = relative_velocity - relative_velocity.dot(normal) * normal;
  const Vec3 stick = -k_t * dt * vt;
  const double cap = mu * fn;
  const double stick_norm = stick.norm();
  Vec3 ft = stick;
  if (stick_norm > cap) ft = (stick_norm > 0.0) ? Vec3(stick * (cap / stick_norm)) : Vec3::Zero();
  return fn * normal + ft;
}

std::vector<Vec3> contact_forces(std::span<const ContactPoint> contacts,
                                 std::span<const Vec3> relative_velocity, double mu, double k_n,
                                 double dt) {
  if (relative_velocity.size() != contacts.size()) {
    throw SimulationError("contact_forces: one relative velocity per contact is required");
  }
  std::vector<Vec3> out(contacts.size());
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    out[i] = coulomb_contact_force(contacts[i].normal, contacts[i].penetration,
                                   relative_velocity[i], mu, k_n, dt, k_n);
  }
  return out;
}

GripperContact::GripperContact(std::shared_ptr<const TetMesh> mesh, double mu, double k_n,
                               double k_t, double margin, double min_slip_width)
    : mesh_(std::move(mesh)),
      mu_(mu),
      k_n_(k_n),
      k_t_(k_t),
      margin_(margin),
      min_slip_width_(min_slip_width) {
  const std::size_t n = kBodies * mesh_->surface_nodes().size();
  member_.assign(n, 0);
  has_anchor_.assign(n, 0);
  hess_active_.assign(n, 0);
  anchor_.assign(n, Vec2::Zero());
  lambda_.assign(n, 0.0);
}

void GripperContact::reset_anchors() { std::fill(has_anchor_.begin(), has_anchor_.end(), 0); }

Eigen::VectorXd GripperContact::extra_values() const {
  return Eigen::Vector2d(gripper.half_separation[0], gripper.half_separation[1]);
}

std::vector<bool> GripperContact::extra_fixed() const {
  return {gripper.frozen, gripper.frozen};
}

void GripperContact::hessian_pattern(int num_nodes, std::vector<std::pair<int, int>>& pairs) const {
  for (int f = 0; f < 2; ++f) {
    for (int node : mesh_->surface_nodes())
      for (int k = 0; k < 3; ++k) pairs.emplace_back(3 * num_nodes + f, 3 * node + k);
  }
}

double GripperContact::gap(int body, const Vec3& p, const Eigen::VectorXd& h,
                           Vec3& normal) const {
  if (body == 2) {
    normal = Vec3::UnitZ();
    return plane.height - p.z();
  }
  normal = gripper.inward_normal(body);
  return -normal.dot(p - gripper.pose.position) - h[body];
}

Vec3 GripperContact::anchor_world(int body, const Vec2& a) const {
  if (body == 2) return {a.x(), a.y(), plane.height};
  return gripper.pose.apply(Vec3(0.0, a.x(), a.y()));
}

Vec2 GripperContact::anchor_local(int body, const Vec3& p) const {
  if (body == 2) return {p.x(), p.y()};
  return gripper.pad_coords(p);
}

Mat3 GripperContact::tangent_projector(int body) const {
  const Vec3 n = body == 2 ? Vec3::UnitZ() : gripper.squeeze_axis();
  return Mat3::Identity() - n * n.transpose();
}

void GripperContact::begin_step(const Positions& x, double dt) {
  dt_ = dt;
  for (int f = 0; f < 2; ++f) {
    h_prev_[f] = gripper.half_separation[f];
    h_pred_[f] = h_prev_[f] + dt * gripper.finger_speed[f];
  }
  const auto& surface = mesh_->surface_nodes();
  const Eigen::VectorXd h = extra_values();
  for (std::size_t s = 0; s < surface.size(); ++s) {
    const Vec3 p = x.col(surface[s]);
    for (int b = 0; b < kBodies; ++b) {
      bool member = contacts_enabled;
      if (member && b == 2) {
        member = plane.enabled && plane.height - p.z() >= -margin_;
      } else if (member) {
        Vec3 n;
        const double d = gap(b, p, h, n);
        member = d >= -margin_ && d <= gripper.pad.thickness &&
                 inside_pad(gripper, gripper.pad_coords(p), margin_);
      }
      const std::size_t i = slot(static_cast<int>(s), b);
      member_[i] = member;
      if (!member) {
        has_anchor_[i] = 0;
        lambda_[i] = 0.0;
      }
    }
  }
}

void GripperContact::begin_iteration(const Positions& x, const Eigen::VectorXd& extra) {
  const auto& surface = mesh_->surface_nodes();
  for (std::size_t s = 0; s < surface.size(); ++s) {
    for (int b = 0; b < kBodies; ++b) {
      const std::size_t i = slot(static_cast<int>(s), b);
      Vec3 n;
      // Touching nodes (d == 0) already get the penalty curvature so a resting
      // node does not overshoot into the body.
      hess_active_[i] = member_[i] && gap(b, x.col(surface[s]), extra, n) >= 0.0;
    }
  }
}

bool GripperContact::refine_model(const Positions& x, const Eigen::VectorXd& extra,
                                  const Eigen::VectorXd& dir, Eigen::VectorXd& model_grad) {
  // The gap is affine in the unknowns, so the full step's penetration is
  // exact. Nodes the step would drive into a body join the quadratic model
  // 1/2 k_n d^2 with its (attracting) linear term.
  const auto& surface = mesh_->surface_nodes();
  const int nn = mesh_->num_nodes();
  bool changed = false;
  for (std::size_t s = 0; s < surface.size(); ++s) {
    const int node = surface[s];
    for (int b = 0; b < kBodies; ++b) {
      const std::size_t i = slot(static_cast<int>(s), b);
      if (!member_[i] || hess_active_[i]) continue;
      Vec3 n;
      const double d = gap(b, x.col(node), extra, n);
      double dd = -n.dot(dir.segment<3>(3 * node));
      if (b < 2) dd -= dir[3 * nn + b];
      if (d + dd > 0.0) {
        hess_active_[i] = 1;
        model_grad.segment<3>(3 * node) -= k_n_ * d * n;
        if (b < 2) model_grad[3 * nn + b] -= k_n_ * d;
        changed = true;
      }
    }
  }
  return changed;
}

double GripperContact::evaluate(const Positions& x, const Eigen::VectorXd& extra,
                                Eigen::VectorXd* grad, HessianSink* hess, double* force_scale) {
  const auto& surface = mesh_->surface_nodes();
  const int nn = mesh_->num_nodes();
  double energy = 0.0;
  double scale = 0.0;

  for (std::size_t s = 0; s < surface.size(); ++s) {
    const int node = surface[s];
    const Vec3 p = x.col(node);
    for (int b = 0; b < kBodies; ++b) {
      const std::size_t i = slot(static_cast<int>(s), b);
      if (!member_[i]) continue;
      Vec3 n;
      const double d = gap(b, p, extra, n);
      Vec3 force = Vec3::Zero();
      if (d > 0.0) {
        energy += 0.5 * k_n_ * d * d;
        force += k_n_ * d * n;
        if (grad && b < 2) (*grad)[3 * nn + b] -= k_n_ * d;
      }
      if (hess && hess_active_[i]) {
        hess->add_node_block(node, k_n_ * n * n.transpose());
        if (b < 2) {
          const int hd = 3 * nn + b;
          for (int k = 0; k < 3; ++k) {
            hess->add(3 * node + k, hd, k_n_ * n[k]);
            hess->add(hd, 3 * node + k, k_n_ * n[k]);
          }
          hess->add(hd, hd, k_n_);
        }
      }
      const double lambda = lambda_[i];
      if (lambda > 0.0 && has_anchor_[i]) {
        const Mat3 proj = tangent_projector(b);
        const FrictionSpring fs =
            friction_spring(proj * (p - anchor_world(b, anchor_[i])), proj, mu_ * lambda,
                            slip_width(mu_ * lambda));
        energy += fs.energy;
        force += fs.force;
        if (hess) hess->add_node_block(node, fs.hessian);
      }
      if (grad) grad->segment<3>(3 * node) -= force;
      scale = std::max(scale, force.cwiseAbs().maxCoeff());
    }
  }

  // Finger actuators: inertia, viscous damping and the closing drive force.
  const double inv_dt2 = 1.0 / (dt_ * dt_);
  for (int f = 0; f < 2; ++f) {
    const double h = extra[f];
    const double dh = h - h_pred_[f];
    const double dv = h - h_prev_[f];
    energy += 0.5 * fingers.mass * inv_dt2 * dh * dh + 0.5 * fingers.damping / dt_ * dv * dv +
              gripper.drive_force[f] * h;
    if (grad) {
      (*grad)[3 * nn + f] +=
          fingers.mass * inv_dt2 * dh + fingers.damping / dt_ * dv + gripper.drive_force[f];
    }
    if (hess) hess->add(3 * nn + f, 3 * nn + f, fingers.mass * inv_dt2 + fingers.damping / dt_);
  }
  if (force_scale) *force_scale = scale;
  return energy;
}

void GripperContact::end_step(const Positions& x, const Eigen::VectorXd& extra, double dt) {
  for (int f = 0; f < 2; ++f) {
    double h = extra[f];
    double v = (h - h_prev_[f]) / dt;
    if (h < 0.0 || h > gripper.max_half_travel) {
      h = std::clamp(h, 0.0, gripper.max_half_travel);
      v = 0.0;
    }
    if (gripper.frozen) v = 0.0;
    gripper.half_separation[f] = h;
    gripper.finger_speed[f] = v;
  }

  contacts_.clear();
  plane_contacts_.clear();
  const auto& surface = mesh_->surface_nodes();
  const Eigen::VectorXd h = extra_values();
  for (std::size_t s = 0; s < surface.size(); ++s) {
    const int node = surface[s];
    const Vec3 p = x.col(node);
    for (int b = 0; b < kBodies; ++b) {
      const std::size_t i = slot(static_cast<int>(s), b);
      if (!member_[i]) continue;
      Vec3 n;
      const double d = gap(b, p, h, n);
      if (d < 0.0) {
        has_anchor_[i] = 0;
        lambda_[i] = 0.0;
        continue;
      }
      if (!has_anchor_[i]) {
        anchor_[i] = anchor_local(b, p);
        has_anchor_[i] = 1;
      }
      const double lambda = k_n_ * d;
      lambda_[i] = lambda;
      const double cap = mu_ * lambda;
      const Vec3 u = tangent_projector(b) * (p - anchor_world(b, anchor_[i]));
      const double un = u.norm();
      ContactPoint c;
      c.node = node;
      c.finger = b;
      c.normal = n;
      c.position = p;
      c.penetration = d;
      c.pad_coords = anchor_local(b, p);
      Vec3 friction = Vec3::Zero();
      if (cap > 0.0) {
        const double w = slip_width(cap);
        friction = friction_spring(u, tangent_projector(b), cap, w).force;
        if (un > kSlipRatio * w) {
          // Return mapping: drag the anchor so the spring sits at the slip limit.
          anchor_[i] = anchor_local(b, p - (kSlipRatio * w) * (u / un));
          c.sliding = true;
        }
      } else {
        anchor_[i] = anchor_local(b, p);
        c.sliding = true;
      }
      c.force = lambda * n + friction;
      (b == 2 ? plane_contacts_ : contacts_).push_back(c);
    }
  }
}

}  // namespace defgrasp
