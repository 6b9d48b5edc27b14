#include "defgrasp/fem.hpp"

#include <cmath>

namespace defgrasp {

ElasticParams ElasticParams::from_young_poisson(double youngs_modulus, double poisson_ratio,
                                                double density) {
  if (!(youngs_modulus > 0.0)) throw ConfigError("Young's modulus must be positive");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5)) {
    throw ConfigError("Poisson ratio must lie in [0, 0.5)");
  }
  if (!(density > 0.0)) throw ConfigError("density must be positive");
  ElasticParams p;
  p.youngs_modulus = youngs_modulus;
  p.poisson_ratio = poisson_ratio;
  p.density = density;
  p.lame_mu = youngs_modulus / (2.0 * (1.0 + poisson_ratio));
  p.lame_lambda =
      youngs_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  return p;
}

ElementBasis ElementBasis::build(const TetMesh& mesh) {
  ElementBasis basis;
  const int ne = mesh.num_tets();
  basis.inv_rest_shape.resize(ne);
  basis.shape_gradients.resize(ne);
  basis.rest_volume = mesh.elem_volumes();
  for (int e = 0; e < ne; ++e) {
    const Tet& t = mesh.tets()[e];
    Mat3 dm;
    dm << mesh.node(t[1]) - mesh.node(t[0]), mesh.node(t[2]) - mesh.node(t[0]),
        mesh.node(t[3]) - mesh.node(t[0]);
    const Mat3 inv = dm.inverse();
    basis.inv_rest_shape[e] = inv;
    // F = sum_a x_a g_a^T: rows of Dm^-1 are the gradients of nodes 1..3.
    Mat34 g;
    g.rightCols<3>() = inv.transpose();
    g.col(0) = -g.rightCols<3>().rowwise().sum();
    basis.shape_gradients[e] = g;
  }
  return basis;
}

SimState SimState::at_rest(const TetMesh& mesh) {
  SimState s;
  s.positions = mesh.nodes();
  s.velocities = Positions::Zero(3, mesh.num_nodes());
  s.elem_rotation.assign(mesh.num_tets(), Mat3::Identity());
  s.elem_stress.assign(mesh.num_tets(), Mat3::Zero());
  s.elem_strain.assign(mesh.num_tets(), Mat3::Zero());
  return s;
}

Mat3 deformation_gradient(const TetMesh& mesh, int elem, const Positions& x,
                          const ElementBasis& basis) {
  const Tet& t = mesh.tets()[elem];
  Mat3 ds;
  ds << x.col(t[1]) - x.col(t[0]), x.col(t[2]) - x.col(t[0]), x.col(t[3]) - x.col(t[0]);
  return ds * basis.inv_rest_shape[elem];
}

Mat3 polar_rotation(const Mat3& F, int elem) {
  const double det = F.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) throw ElementInversionError(elem, det);
  Mat3 x = F;
  for (int it = 0; it < 64; ++it) {
    const Mat3 inv_t = x.inverse().transpose();
    // Frobenius-norm scaling accelerates the early iterations.
    const double gamma = std::sqrt(std::sqrt(inv_t.squaredNorm() / x.squaredNorm()));
    const Mat3 next = 0.5 * (gamma * x + inv_t / gamma);
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (change <= 1e-15) break;
    if (change <= 1e-9 &&
        (x.transpose() * x - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-14) {
      break;
    }
  }
  return x;
}

Mat3 corotated_strain(const Mat3& F, const Mat3& R) {
  const Mat3 rf = R.transpose() * F;
  return 0.5 * (rf + rf.transpose()) - Mat3::Identity();
}

Mat3 element_stress(const Mat3& strain, const ElasticParams& params) {
  return 2.0 * params.lame_mu * strain +
         params.lame_lambda * strain.trace() * Mat3::Identity();
}

double von_mises(const Mat3& sigma) {
  const Mat3 dev = sigma - (sigma.trace() / 3.0) * Mat3::Identity();
  return std::sqrt(1.5 * dev.squaredNorm());
}

double energy_density(const Mat3& strain, const ElasticParams& params) {
  const double tr = strain.trace();
  return params.lame_mu * strain.squaredNorm() + 0.5 * params.lame_lambda * tr * tr;
}

Positions internal_forces(const TetMesh& mesh, const Positions& x, const ElementBasis& basis,
                          const ElasticParams& params) {
  Positions f = Positions::Zero(3, mesh.num_nodes());
  for (int e = 0; e < mesh.num_tets(); ++e) {
    const Mat3 F = deformation_gradient(mesh, e, x, basis);
    const Mat3 R = polar_rotation(F, e);
    const Mat3 P = R * element_stress(corotated_strain(F, R), params);
    const Mat34 h = -basis.rest_volume[e] * P * basis.shape_gradients[e];
    const Tet& t = mesh.tets()[e];
    for (int a = 0; a < 4; ++a) f.col(t[a]) += h.col(a);
  }
  return f;
}

double elastic_energy(const TetMesh& mesh, const Positions& x, const ElementBasis& basis,
                      const ElasticParams& params) {
  double energy = 0.0;
  for (int e = 0; e < mesh.num_tets(); ++e) {
    const Mat3 F = deformation_gradient(mesh, e, x, basis);
    const Mat3 R = polar_rotation(F, e);
    energy += basis.rest_volume[e] * energy_density(corotated_strain(F, R), params);
  }
  return energy;
}

void update_element_fields(const TetMesh& mesh, const ElementBasis& basis,
                           const ElasticParams& params, SimState& state) {
  const int ne = mesh.num_tets();
  state.elem_rotation.resize(ne);
  state.elem_strain.resize(ne);
  state.elem_stress.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const Mat3 F = deformation_gradient(mesh, e, state.positions, basis);
    const Mat3 R = polar_rotation(F, e);
    const Mat3 eps = corotated_strain(F, R);
    state.elem_rotation[e] = R;
    state.elem_strain[e] = eps;
    state.elem_stress[e] = R * element_stress(eps, params) * R.transpose();
  }
}

double strain_energy(const SimState& state, const TetMesh& mesh, bool half_factor) {
  const double factor = half_factor ? 0.5 : 1.0;
  double energy = 0.0;
  for (int e = 0; e < mesh.num_tets(); ++e) {
    const Mat3& R = state.elem_rotation[e];
    const Mat3 sigma = R.transpose() * state.elem_stress[e] * R;
    energy += mesh.elem_volumes()[e] * factor * (sigma.cwiseProduct(state.elem_strain[e])).sum();
  }
  return energy;
}

}  // namespace defgrasp
