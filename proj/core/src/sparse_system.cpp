#include "sparse_system.hpp"

#include <algorithm>

namespace defgrasp {

void HessianSink::add_node_block(int node, const Mat3& block) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) add(3 * node + i, 3 * node + j, block(i, j));
}

SparseSystem::SparseSystem(const TetMesh& mesh, int num_extra,
                           std::vector<std::pair<int, int>> pairs,
                           const IntegratorSettings& settings)
    : num_extra_(num_extra), pairs_(std::move(pairs)), cg_tol_(settings.cg_rel_tol) {
  const int n = 3 * mesh.num_nodes() + num_extra;
  direct_ = n < settings.direct_solver_max_unknowns;

  const int ne = mesh.num_tets();
  elem_dofs_.resize(12 * static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    for (int a = 0; a < 4; ++a)
      for (int k = 0; k < 3; ++k) elem_dofs_[12 * e + 3 * a + k] = 3 * mesh.tets()[e][a] + k;
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(144 * static_cast<std::size_t>(ne) + n + 2 * pairs_.size());
  for (int e = 0; e < ne; ++e) {
    const int* dofs = &elem_dofs_[12 * e];
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) trips.emplace_back(dofs[i], dofs[j], 0.0);
  }
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, 0.0);
  for (const auto& [r, c] : pairs_) {
    trips.emplace_back(r, c, 0.0);
    trips.emplace_back(c, r, 0.0);
  }
  matrix_.resize(n, n);
  matrix_.setFromTriplets(trips.begin(), trips.end());
  matrix_.makeCompressed();

  elem_offsets_.resize(144 * static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    const int* dofs = &elem_dofs_[12 * e];
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) elem_offsets_[144 * e + 12 * i + j] = find(dofs[i], dofs[j]);
  }
  diag_offsets_.resize(n);
  for (int i = 0; i < n; ++i) diag_offsets_[i] = find(i, i);
  fixed_.assign(n, 0);
}

int SparseSystem::find(int row, int col) const {
  const int* outer = matrix_.outerIndexPtr();
  const int* inner = matrix_.innerIndexPtr();
  const int* begin = inner + outer[col];
  const int* end = inner + outer[col + 1];
  const int* it = std::lower_bound(begin, end, row);
  if (it == end || *it != row) return -1;
  return static_cast<int>(it - inner);
}

void SparseSystem::begin_assembly(const std::vector<char>& fixed) {
  fixed_ = fixed;
  std::fill(matrix_.valuePtr(), matrix_.valuePtr() + matrix_.nonZeros(), 0.0);
}

void SparseSystem::add(int row, int col, double value) {
  if (fixed_[row] || fixed_[col]) return;
  const int off = find(row, col);
  if (off < 0) throw SimulationError("Hessian entry outside the declared sparsity pattern");
  matrix_.valuePtr()[off] += value;
}

void SparseSystem::add_element(int elem, const Mat12& block) {
  const int* dofs = &elem_dofs_[12 * elem];
  const int* offs = &elem_offsets_[144 * static_cast<std::size_t>(elem)];
  double* values = matrix_.valuePtr();
  for (int i = 0; i < 12; ++i) {
    if (fixed_[dofs[i]]) continue;
    for (int j = 0; j < 12; ++j) {
      if (fixed_[dofs[j]]) continue;
      values[offs[12 * i + j]] += block(i, j);
    }
  }
}

void SparseSystem::add_diagonal(int dof, double value) {
  if (fixed_[dof]) return;
  matrix_.valuePtr()[diag_offsets_[dof]] += value;
}

void SparseSystem::end_assembly() {
  for (int i = 0; i < size(); ++i) {
    if (fixed_[i]) matrix_.valuePtr()[diag_offsets_[i]] = 1.0;
  }
}

bool SparseSystem::solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) {
  if (direct_) {
    if (!analyzed_) {
      ldlt_.analyzePattern(matrix_);
      analyzed_ = true;
    }
    ldlt_.factorize(matrix_);
    if (ldlt_.info() != Eigen::Success) return false;
    x = ldlt_.solve(rhs);
    return ldlt_.info() == Eigen::Success && x.allFinite();
  }
  cg_.setTolerance(cg_tol_);
  cg_.setMaxIterations(std::max(1000, 4 * size()));
  cg_.compute(matrix_);
  x = cg_.solve(rhs);
  return cg_.info() == Eigen::Success && x.allFinite();
}

}  // namespace defgrasp
