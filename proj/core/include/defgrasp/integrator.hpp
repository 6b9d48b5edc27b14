#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "defgrasp/fem.hpp"

namespace defgrasp {

class SparseSystem;

/// Receives Hessian contributions keyed by global unknown index. Unknowns are
/// ordered [node 0 xyz, node 1 xyz, ..., extra dofs].
class HessianSink {
 public:
  virtual ~HessianSink() = default;
  virtual void add(int row, int col, double value) = 0;
  /// Adds a symmetric 3x3 block on the diagonal of node `node`.
  void add_node_block(int node, const Mat3& block);
};

/// Additional energy terms and unknowns solved together with the elastic body
/// (contact penalties, friction, actuated finger coordinates).
class CouplingTerm {
 public:
  virtual ~CouplingTerm() = default;

  virtual int num_extra_dofs() const { return 0; }
  /// Current values of the extra unknowns.
  virtual Eigen::VectorXd extra_values() const { return {}; }
  /// Mask of extra unknowns held fixed during this step.
  virtual std::vector<bool> extra_fixed() const { return {}; }
  /// Off-diagonal (row, col) pairs this term may write, beyond the node blocks.
  virtual void hessian_pattern(int num_nodes, std::vector<std::pair<int, int>>& pairs) const {
    (void)num_nodes;
    (void)pairs;
  }

  /// Called once before the Newton solve with the start-of-step state.
  virtual void begin_step(const Positions& x, double dt) = 0;
  /// Called at the start of every Newton iteration with the current iterate.
  virtual void begin_iteration(const Positions& x, const Eigen::VectorXd& extra) {
    (void)x;
    (void)extra;
  }
  /// Called after a Newton direction `dir` (size 3N + extra) has been solved
  /// for. A term with a piecewise energy may switch on pieces the full step
  /// would enter, adding their linearization to `model_grad` and their
  /// curvature to later assemblies. Returns true if anything changed; the
  /// system is then reassembled and solved again.
  virtual bool refine_model(const Positions& x, const Eigen::VectorXd& extra,
                            const Eigen::VectorXd& dir, Eigen::VectorXd& model_grad) {
    (void)x;
    (void)extra;
    (void)dir;
    (void)model_grad;
    return false;
  }
  /// Energy of the term; adds its gradient into `grad` (size 3N + extra) and
  /// Hessian into `hess` when non-null. `force_scale` receives the infinity
  /// norm of the per-node forces the term applies to the body.
  virtual double evaluate(const Positions& x, const Eigen::VectorXd& extra,
                          Eigen::VectorXd* grad, HessianSink* hess, double* force_scale) = 0;
  /// Called with the converged iterate.
  virtual void end_step(const Positions& x, const Eigen::VectorXd& extra, double dt) = 0;
};

/// Dirichlet constraint pinning one node to a prescribed position.
struct NodeConstraint {
  int node = 0;
  Vec3 position = Vec3::Zero();
};

struct IntegratorSettings {
  double rayleigh_alpha = 0.0;  // mass-proportional damping, 1/s
  double rayleigh_beta = 0.002; // stiffness-proportional damping, s
  double newton_rel_tol = 1e-6;
  double newton_abs_tol = 1e-12;  // N
  int newton_max_iterations = 20;
  int line_search_max_halvings = 12;
  int direct_solver_max_unknowns = 10000;
  double cg_rel_tol = 1e-8;
};

struct StepInputs {
  double dt = 1.0 / 1500.0;
  Vec3 gravity = Vec3::Zero();  // acceleration, m/s^2
  const Positions* external_forces = nullptr;
  std::span<const NodeConstraint> constraints = {};
  /// Drop inertia and damping and solve for static equilibrium.
  bool static_solve = false;
};

struct StepReport {
  int newton_iterations = 0;
  double residual = 0.0;
  double tolerance = 0.0;
};

/// Backward-Euler integrator for the corotated linear body. Each step solves the
/// incremental problem with Newton's method on positions, assembling the
/// fixed-rotation stiffness R K0 R^T per element.
class ImplicitIntegrator {
 public:
  ImplicitIntegrator(std::shared_ptr<const TetMesh> mesh, ElasticParams params,
                     IntegratorSettings settings = {});
  ImplicitIntegrator(const ImplicitIntegrator& other);
  ImplicitIntegrator& operator=(const ImplicitIntegrator& other);
  ImplicitIntegrator(ImplicitIntegrator&&) noexcept;
  ImplicitIntegrator& operator=(ImplicitIntegrator&&) noexcept;
  ~ImplicitIntegrator();

  /// Advances `state` by inputs.dt. Throws NewtonDivergenceError or
  /// ElementInversionError; `state` is left untouched on failure.
  StepReport step(SimState& state, const StepInputs& inputs, CouplingTerm* coupling = nullptr);

  const TetMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TetMesh>& mesh_ptr() const { return mesh_; }
  const ElementBasis& basis() const { return *basis_; }
  const ElasticParams& params() const { return params_; }
  const IntegratorSettings& settings() const { return settings_; }

 private:
  double evaluate(const Positions& x, const Eigen::VectorXd& extra, const Positions& x_prev,
                  const Positions& x_pred,
                  const std::vector<Mat3>& rot_prev, const std::vector<Mat3>& grad_prev,
                  double dt, bool static_solve,
                  const Vec3& gravity, const Positions* f_ext, CouplingTerm* coupling,
                  Eigen::VectorXd* grad, bool with_hessian, double* force_scale);

  std::shared_ptr<const TetMesh> mesh_;
  std::shared_ptr<const ElementBasis> basis_;
  ElasticParams params_;
  IntegratorSettings settings_;
  std::unique_ptr<SparseSystem> system_;  // rebuilt lazily, never shared
};

/// Convenience wrapper advancing a copy of `state` by one step.
SimState step_implicit(const SimState& state, double dt, const Positions& external_forces,
                       std::span<const NodeConstraint> boundary,
                       const std::shared_ptr<const TetMesh>& mesh, const ElasticParams& params,
                       const Vec3& gravity = Vec3::Zero(), IntegratorSettings settings = {});

}  // namespace defgrasp
