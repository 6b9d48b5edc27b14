#include "defgrasp/integrator.hpp"

#include <cmath>
#include <limits>

#include "sparse_system.hpp"

namespace defgrasp {

namespace {

// Rest-frame linear stiffness block K_ab / V for shape gradients g_a, g_b.
Mat3 linear_block(const Vec3& ga, const Vec3& gb, double mu, double lambda) {
  return mu * ga.dot(gb) * Mat3::Identity() + mu * gb * ga.transpose() +
         lambda * ga * gb.transpose();
}

double inf_norm_free(const Eigen::VectorXd& g, const std::vector<char>& fixed) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!fixed[i]) r = std::max(r, std::abs(g[i]));
  }
  return r;
}

}  // namespace

ImplicitIntegrator::ImplicitIntegrator(std::shared_ptr<const TetMesh> mesh, ElasticParams params,
                                       IntegratorSettings settings)
    : mesh_(std::move(mesh)),
      basis_(std::make_shared<const ElementBasis>(ElementBasis::build(*mesh_))),
      params_(params),
      settings_(settings) {}

ImplicitIntegrator::ImplicitIntegrator(const ImplicitIntegrator& other)
    : mesh_(other.mesh_), basis_(other.basis_), params_(other.params_), settings_(other.settings_) {}

ImplicitIntegrator& ImplicitIntegrator::operator=(const ImplicitIntegrator& other) {
  if (this != &other) {
    mesh_ = other.mesh_;
    basis_ = other.basis_;
    params_ = other.params_;
    settings_ = other.settings_;
    system_.reset();
  }
  return *this;
}

ImplicitIntegrator::ImplicitIntegrator(ImplicitIntegrator&&) noexcept = default;
ImplicitIntegrator& ImplicitIntegrator::operator=(ImplicitIntegrator&&) noexcept = default;
ImplicitIntegrator::~ImplicitIntegrator() = default;

double ImplicitIntegrator::evaluate(const Positions& x, const Eigen::VectorXd& extra,
                                    const Positions& x_prev, const Positions& x_pred,
                                    const std::vector<Mat3>& rot_prev,
                                    const std::vector<Mat3>& grad_prev, double dt,
                                    bool static_solve, const Vec3& gravity,
                                    const Positions* f_ext, CouplingTerm* coupling,
                                    Eigen::VectorXd* grad, bool with_hessian,
                                    double* force_scale) {
  const TetMesh& mesh = *mesh_;
  const ElementBasis& basis = *basis_;
  const int nn = mesh.num_nodes();
  const double mu = params_.lame_mu;
  const double lambda = params_.lame_lambda;
  const double beta = static_solve ? 0.0 : settings_.rayleigh_beta / dt;
  const double alpha = static_solve ? 0.0 : settings_.rayleigh_alpha / dt;
  const double inertia = static_solve ? 0.0 : 1.0 / (dt * dt);

  double energy = 0.0;
  double scale = 0.0;
  const auto& masses = mesh.node_masses();
  for (int i = 0; i < nn; ++i) {
    const double m = masses[i];
    const Vec3 xi = x.col(i);
    Vec3 fi = m * gravity;
    if (f_ext) fi += f_ext->col(i);
    scale = std::max(scale, fi.cwiseAbs().maxCoeff());
    const Vec3 dx = xi - x_pred.col(i);
    energy += 0.5 * m * inertia * dx.squaredNorm() - fi.dot(xi);
    if (grad) grad->segment<3>(3 * i) += m * inertia * dx - fi;
    if (with_hessian) {
      for (int k = 0; k < 3; ++k) system_->add_diagonal(3 * i + k, m * (inertia + alpha));
    }
  }
  if (alpha > 0.0) {
    for (int i = 0; i < nn; ++i) {
      const Vec3 dx = x.col(i) - x_prev.col(i);
      energy += 0.5 * alpha * masses[i] * dx.squaredNorm();
      if (grad) grad->segment<3>(3 * i) += alpha * masses[i] * dx;
    }
  }

  Mat12 block;
  for (int e = 0; e < mesh.num_tets(); ++e) {
    const Tet& t = mesh.tets()[e];
    const Mat3 F = deformation_gradient(mesh, e, x, basis);
    const Mat3 R = polar_rotation(F, e);
    const Mat3 eps = corotated_strain(F, R);
    const double vol = basis.rest_volume[e];
    const Mat3 stress = element_stress(eps, params_);
    energy += vol * energy_density(eps, params_);
    const Mat34& g = basis.shape_gradients[e];
    // Stiffness-proportional damping, linearized about the start of the step:
    // quadratic in x with stiffness R_n K0 R_n^T.
    Mat3 damp_stress = Mat3::Zero();
    if (beta > 0.0) {
      const Mat3 dF = rot_prev[e].transpose() * (F - grad_prev[e]);
      const Mat3 deps = 0.5 * (dF + dF.transpose());
      energy += beta * vol * energy_density(deps, params_);
      damp_stress = beta * element_stress(deps, params_);
    }
    if (grad) {
      const Mat34 h = vol * (R * stress + rot_prev[e] * damp_stress) * g;
      for (int a = 0; a < 4; ++a) grad->segment<3>(3 * t[a]) += h.col(a);
    }
    if (with_hessian) {
      const Mat3& Rn = rot_prev[e];
      for (int a = 0; a < 4; ++a) {
        for (int b = a; b < 4; ++b) {
          const Mat3 k0 = vol * linear_block(g.col(a), g.col(b), mu, lambda);
          Mat3 kab = R * k0 * R.transpose();
          if (beta > 0.0) kab += beta * Rn * k0 * Rn.transpose();
          block.block<3, 3>(3 * a, 3 * b) = kab;
          if (b != a) block.block<3, 3>(3 * b, 3 * a) = kab.transpose();
        }
      }
      system_->add_element(e, block);
    }
  }

  if (coupling) {
    double cscale = 0.0;
    energy += coupling->evaluate(x, extra, grad, with_hessian ? system_.get() : nullptr, &cscale);
    scale = std::max(scale, cscale);
  }
  if (force_scale) *force_scale = scale;
  return energy;
}

StepReport ImplicitIntegrator::step(SimState& state, const StepInputs& in,
                                    CouplingTerm* coupling) {
  const TetMesh& mesh = *mesh_;
  const int nn = mesh.num_nodes();
  const int n_extra = coupling ? coupling->num_extra_dofs() : 0;
  const int n_dofs = 3 * nn + n_extra;
  if (!(in.dt > 0.0)) throw SimulationError("time step must be positive");

  std::vector<std::pair<int, int>> pairs;
  if (coupling) coupling->hessian_pattern(nn, pairs);
  if (!system_ || !system_->compatible(n_extra, pairs)) {
    system_ = std::make_unique<SparseSystem>(mesh, n_extra, std::move(pairs), settings_);
  }

  std::vector<char> fixed(n_dofs, 0);
  Positions x = state.positions;
  Positions x_pred = state.positions;
  if (!in.static_solve) x_pred += in.dt * state.velocities;
  // Start from the inertial predictor unless it inverts an element.
  Positions x_start = x_pred;
  for (const NodeConstraint& c : in.constraints) {
    x_start.col(c.node) = c.position;
    for (int k = 0; k < 3; ++k) fixed[3 * c.node + k] = 1;
  }
  Eigen::VectorXd extra = coupling ? coupling->extra_values() : Eigen::VectorXd();
  if (coupling) {
    const auto extra_fixed = coupling->extra_fixed();
    for (int k = 0; k < n_extra; ++k) fixed[3 * nn + k] = extra_fixed[k] ? 1 : 0;
  }
  if (coupling) coupling->begin_step(state.positions, in.dt);

  // Start-of-step deformation gradients and rotations for the damping term.
  std::vector<Mat3> grad_prev(mesh.num_tets()), rot_prev(mesh.num_tets());
  const bool have_rot = static_cast<int>(state.elem_rotation.size()) == mesh.num_tets();
  for (int e = 0; e < mesh.num_tets(); ++e) {
    grad_prev[e] = deformation_gradient(mesh, e, state.positions, *basis_);
    rot_prev[e] = have_rot ? state.elem_rotation[e] : polar_rotation(grad_prev[e], e);
  }

  x = x_start;
  bool start_ok = true;
  for (int e = 0; e < mesh.num_tets() && start_ok; ++e) {
    if (!(deformation_gradient(mesh, e, x, *basis_).determinant() > 0.0)) start_ok = false;
  }
  if (!start_ok) {
    x = state.positions;
    for (const NodeConstraint& c : in.constraints) x.col(c.node) = c.position;
  }

  Eigen::VectorXd grad(n_dofs), dir(n_dofs), trial_grad(n_dofs);
  StepReport report;
  bool converged = false;
  grad.setZero();
  double scale = 0.0;
  double energy = evaluate(x, extra, state.positions, x_pred, rot_prev, grad_prev, in.dt, in.static_solve,
                           in.gravity, in.external_forces, coupling, &grad, false, &scale);
  for (int it = 0; it <= settings_.newton_max_iterations; ++it) {
    const double residual = inf_norm_free(grad, fixed);
    const double tol = settings_.newton_rel_tol * scale + settings_.newton_abs_tol;
    report.newton_iterations = it;
    report.residual = residual;
    report.tolerance = tol;
    if (residual <= tol) {
      converged = true;
      break;
    }
    if (it == settings_.newton_max_iterations) break;

    // The Hessian is assembled only once another iteration is needed.
    if (coupling) coupling->begin_iteration(x, extra);
    system_->begin_assembly(fixed);
    evaluate(x, extra, state.positions, x_pred, rot_prev, grad_prev, in.dt, in.static_solve, in.gravity,
             in.external_forces, coupling, nullptr, true, nullptr);
    system_->end_assembly();
    Eigen::VectorXd rhs = -grad;
    for (int i = 0; i < n_dofs; ++i) {
      if (fixed[i]) rhs[i] = 0.0;
    }
    if (!system_->solve(rhs, dir)) throw SimulationError("linear solve breakdown");
    for (int i = 0; i < n_dofs; ++i) {
      if (fixed[i]) dir[i] = 0.0;
    }
    if (coupling) {
      Eigen::VectorXd model_grad = grad;
      Eigen::VectorXd refined(n_dofs);
      for (int pass = 0; pass < 4 && coupling->refine_model(x, extra, dir, model_grad); ++pass) {
        system_->begin_assembly(fixed);
        evaluate(x, extra, state.positions, x_pred, rot_prev, grad_prev, in.dt, in.static_solve,
                 in.gravity, in.external_forces, coupling, nullptr, true, nullptr);
        system_->end_assembly();
        Eigen::VectorXd model_rhs = -model_grad;
        for (int i = 0; i < n_dofs; ++i) {
          if (fixed[i]) model_rhs[i] = 0.0;
        }
        if (!system_->solve(model_rhs, refined)) break;
        for (int i = 0; i < n_dofs; ++i) {
          if (fixed[i]) refined[i] = 0.0;
        }
        if (!(grad.dot(refined) < 0.0)) break;
        dir = refined;
      }
    }
    const double slope = grad.dot(dir);

    double step = 1.0;
    bool accepted = false;
    double trial_energy = 0.0;
    double trial_scale = 0.0;
    Positions x_trial(3, nn);
    Eigen::VectorXd extra_trial(n_extra);
    for (int ls = 0; ls <= settings_.line_search_max_halvings; ++ls, step *= 0.5) {
      x_trial = x + step * Eigen::Map<const Positions>(dir.data(), 3, nn);
      if (n_extra > 0) extra_trial = extra + step * dir.tail(n_extra);
      trial_grad.setZero();
      trial_scale = 0.0;
      try {
        trial_energy = evaluate(x_trial, extra_trial, state.positions, x_pred, rot_prev, grad_prev, in.dt,
                                in.static_solve, in.gravity, in.external_forces, coupling, &trial_grad,
                                false, &trial_scale);
      } catch (const ElementInversionError&) {
        continue;
      }
      const double trial_residual = inf_norm_free(trial_grad, fixed);
      // Near convergence energy differences drop below round-off; fall back
      // to the residual there.
      const bool flat = std::abs(trial_energy - energy) <= 1e-12 * std::abs(energy);
      if (trial_energy <= energy + 1e-4 * step * slope || (flat && trial_residual < residual)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    x = x_trial;
    extra = extra_trial;
    energy = trial_energy;
    grad.swap(trial_grad);
    scale = trial_scale;
  }
  if (!converged) throw NewtonDivergenceError(report.residual, report.tolerance);

  SimState next = state;
  if (in.static_solve) {
    next.velocities.setZero();
  } else {
    next.velocities = (x - state.positions) / in.dt;
  }
  next.positions = x;
  update_element_fields(mesh, *basis_, params_, next);
  next.time = state.time + in.dt;
  if (coupling) coupling->end_step(x, extra, in.dt);
  state = std::move(next);
  return report;
}

SimState step_implicit(const SimState& state, double dt, const Positions& external_forces,
                       std::span<const NodeConstraint> boundary,
                       const std::shared_ptr<const TetMesh>& mesh, const ElasticParams& params,
                       const Vec3& gravity, IntegratorSettings settings) {
  ImplicitIntegrator integrator(mesh, params, settings);
  SimState next = state;
  StepInputs in;
  in.dt = dt;
  in.gravity = gravity;
  in.external_forces = external_forces.size() ? &external_forces : nullptr;
  in.constraints = boundary;
  integrator.step(next, in);
  return next;
}

}  // namespace defgrasp
