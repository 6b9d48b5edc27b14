#pragma once

#include <memory>
#include <vector>

#include "defgrasp/material.hpp"
#include "defgrasp/mesh.hpp"

namespace defgrasp {

using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Per-element rest quantities for linear tetrahedra.
struct ElementBasis {
  std::vector<Mat3> inv_rest_shape;   // Dm^-1
  std::vector<Mat34> shape_gradients; // columns: gradient of each nodal shape function
  std::vector<double> rest_volume;

  static ElementBasis build(const TetMesh& mesh);
};

/// Nodal state plus per-element rotation and stress of the corotated model.
struct SimState {
  Positions positions;
  Positions velocities;
  std::vector<Mat3> elem_rotation;
  std::vector<Mat3> elem_stress;  // world frame, R * sigma * R^T
  std::vector<Mat3> elem_strain;  // corotated frame
  double time = 0.0;

  /// Rest configuration at zero velocity.
  static SimState at_rest(const TetMesh& mesh);
};

/// F = Ds * Dm^-1 for element `elem`.
Mat3 deformation_gradient(const TetMesh& mesh, int elem, const Positions& x,
                          const ElementBasis& basis);

/// Rotation factor of the polar decomposition F = R S, via scaled Newton
/// iteration. Throws ElementInversionError (carrying `elem`) if det F <= 0.
Mat3 polar_rotation(const Mat3& F, int elem = -1);

/// eps = sym(R^T F) - I
Mat3 corotated_strain(const Mat3& F, const Mat3& R);

/// sigma = 2 mu eps + lambda tr(eps) I
Mat3 element_stress(const Mat3& strain, const ElasticParams& params);

/// sqrt(3/2 s:s) with s the deviator of sigma.
double von_mises(const Mat3& sigma);

/// Elastic energy density mu eps:eps + lambda/2 tr(eps)^2 (equals 1/2 sigma:eps).
double energy_density(const Mat3& strain, const ElasticParams& params);

/// Per-node internal elastic forces of the corotated linear model, rotation
/// recomputed per element from the current positions.
Positions internal_forces(const TetMesh& mesh, const Positions& x, const ElementBasis& basis,
                          const ElasticParams& params);

/// Total corotated elastic energy at positions x.
double elastic_energy(const TetMesh& mesh, const Positions& x, const ElementBasis& basis,
                      const ElasticParams& params);

/// Recomputes elem_rotation, elem_strain and elem_stress from state.positions.
void update_element_fields(const TetMesh& mesh, const ElementBasis& basis,
                           const ElasticParams& params, SimState& state);

/// Sum over elements of V_e * c * sigma_e : eps_e with c = 1/2 when
/// `half_factor` is set, 1 otherwise. Uses the stored element fields.
double strain_energy(const SimState& state, const TetMesh& mesh, bool half_factor = true);

}  // namespace defgrasp
