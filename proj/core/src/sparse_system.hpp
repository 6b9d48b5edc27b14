#pragma once

#include <utility>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "defgrasp/integrator.hpp"

namespace defgrasp {

using Mat12 = Eigen::Matrix<double, 12, 12>;

/// Symmetric sparse Hessian with a pattern fixed at construction: element
/// blocks, node diagonal blocks, extra unknowns and caller-supplied pairs.
/// Values are refilled every Newton iteration; the symbolic factorization is
/// computed once.
class SparseSystem final : public HessianSink {
 public:
  SparseSystem(const TetMesh& mesh, int num_extra, std::vector<std::pair<int, int>> pairs,
               const IntegratorSettings& settings);

  bool compatible(int num_extra, const std::vector<std::pair<int, int>>& pairs) const {
    return num_extra == num_extra_ && pairs == pairs_;
  }
  int size() const { return static_cast<int>(matrix_.rows()); }

  void begin_assembly(const std::vector<char>& fixed);
  void add(int row, int col, double value) override;
  void add_element(int elem, const Mat12& block);
  void add_diagonal(int dof, double value);
  /// Puts ones on the diagonal of fixed unknowns; call before solve.
  void end_assembly();

  /// Solves A x = rhs. Returns false on numerical breakdown.
  bool solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x);

 private:
  int find(int row, int col) const;

  Eigen::SparseMatrix<double> matrix_;
  std::vector<int> elem_offsets_;  // 144 per element, row-major over local dofs
  std::vector<int> diag_offsets_;
  std::vector<int> elem_dofs_;     // 12 per element
  std::vector<char> fixed_;
  int num_extra_ = 0;
  std::vector<std::pair<int, int>> pairs_;
  bool direct_ = true;
  double cg_tol_ = 1e-8;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg_;
};

}  // namespace defgrasp
