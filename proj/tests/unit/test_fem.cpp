#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "defgrasp/mesh_gen.hpp"
#include "test_support.hpp"

using namespace defgrasp;

namespace {

ElasticParams rubber() { return ElasticParams::from_young_poisson(2e5, 0.3, 1000.0); }

Mat3 random_spd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  Mat3 a;
  for (int i = 0; i < 9; ++i) a(i) = u(rng);
  return Mat3::Identity() + 0.5 * (a + a.transpose());
}

}  // namespace

TEST(Material, LameConstants) {
  const ElasticParams p = ElasticParams::from_young_poisson(2e5, 0.3, 1000.0);
  EXPECT_NEAR(p.lame_mu, 2e5 / 2.6, 1e-9);
  EXPECT_NEAR(p.lame_lambda, 2e5 * 0.3 / (1.3 * 0.4), 1e-9);
}

TEST(Material, RejectsInvalidParameters) {
  EXPECT_THROW(ElasticParams::from_young_poisson(0.0, 0.3, 1000.0), ConfigError);
  EXPECT_THROW(ElasticParams::from_young_poisson(1e5, 0.5, 1000.0), ConfigError);
  EXPECT_THROW(ElasticParams::from_young_poisson(1e5, -0.1, 1000.0), ConfigError);
  EXPECT_THROW(ElasticParams::from_young_poisson(1e5, 0.3, 0.0), ConfigError);
}

TEST(Fem, PolarRotationRecoversRotation) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 R = test::random_rotation(rng);
    const Mat3 S = random_spd(rng);
    const Mat3 got = polar_rotation(R * S);
    EXPECT_LT((got - R).norm(), 1e-10);
    EXPECT_NEAR(got.determinant(), 1.0, 1e-12);
  }
}

TEST(Fem, PolarRotationThrowsOnInversion) {
  Mat3 F = Mat3::Identity();
  F(2, 2) = -0.5;
  try {
    polar_rotation(F, 17);
    FAIL() << "expected ElementInversionError";
  } catch (const ElementInversionError& e) {
    EXPECT_EQ(e.element(), 17);
  }
}

TEST(Fem, CorotatedStrainIgnoresRotation) {
  std::mt19937_64 rng(2);
  const Mat3 R = test::random_rotation(rng);
  const Mat3 S = random_spd(rng);
  const Mat3 F = R * S;
  EXPECT_LT((corotated_strain(F, polar_rotation(F)) - (S - Mat3::Identity())).norm(), 1e-10);
  EXPECT_LT(corotated_strain(R, R).norm(), 1e-14);
}

TEST(Fem, StressAndEnergyDensityClosedForm) {
  const ElasticParams p = rubber();
  std::mt19937_64 rng(3);
  const Mat3 eps = random_spd(rng) - Mat3::Identity();
  const Mat3 sigma = element_stress(eps, p);
  const Mat3 expected = 2 * p.lame_mu * eps + p.lame_lambda * eps.trace() * Mat3::Identity();
  EXPECT_LT((sigma - expected).norm(), 1e-9);
  EXPECT_NEAR(energy_density(eps, p), 0.5 * (sigma.array() * eps.array()).sum(), 1e-9);
}

TEST(Fem, VonMisesIdentities) {
  Mat3 uni = Mat3::Zero();
  uni(1, 1) = -4.0e5;
  EXPECT_NEAR(von_mises(uni), 4.0e5, 4.0e5 * 1e-12);
  EXPECT_NEAR(von_mises(3.0e6 * Mat3::Identity()), 0.0, 3.0e6 * 1e-12);
  Mat3 shear = Mat3::Zero();
  shear(0, 2) = shear(2, 0) = 250.0;
  EXPECT_NEAR(von_mises(shear), std::sqrt(3.0) * 250.0, 1e-12 * 250.0);
}

TEST(Fem, VonMisesRotationInvariant) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 s = 1e4 * (random_spd(rng) - Mat3::Identity());
    const Mat3 R = test::random_rotation(rng);
    EXPECT_NEAR(von_mises(R * s * R.transpose()), von_mises(s), 1e-9 * von_mises(s));
  }
}

TEST(Fem, DeformationGradientOfAffineMap) {
  const TetMesh m = gen::box(Vec3(0.02, 0.02, 0.02), 2, 2, 2, 1000.0);
  const ElementBasis basis = ElementBasis::build(m);
  Mat3 A;
  A << 1.1, 0.05, 0.0, -0.02, 0.95, 0.1, 0.0, 0.03, 1.02;
  const Positions x = (A * m.nodes()).colwise() + Vec3(0.1, 0.2, 0.3);
  for (int e = 0; e < m.num_tets(); ++e) EXPECT_LT((deformation_gradient(m, e, x, basis) - A).norm(), 1e-12);
}

TEST(Fem, InternalForcesBalanceLinearAndAngularMomentum) {
  const TetMesh m = gen::box(Vec3(0.03, 0.02, 0.02), 3, 2, 2, 1000.0);
  const ElementBasis basis = ElementBasis::build(m);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1e-3);
  for (int trial = 0; trial < 10; ++trial) {
    Positions x = test::random_rotation(rng) * m.nodes();
    for (int i = 0; i < x.size(); ++i) x(i) += n(rng);
    const Positions f = internal_forces(m, x, basis, rubber());
    Vec3 torque = Vec3::Zero();
    for (int i = 0; i < x.cols(); ++i) torque += Vec3(x.col(i)).cross(Vec3(f.col(i)));
    const double scale = f.colwise().norm().maxCoeff();
    EXPECT_LT(f.rowwise().sum().norm(), 1e-10 * scale);
    EXPECT_LT(torque.norm(), 1e-10 * scale * 0.05);
  }
}

TEST(Fem, RigidMotionIsStressFree) {
  const TetMesh m = gen::box(Vec3(0.03, 0.02, 0.02), 3, 2, 2, 1000.0);
  const ElementBasis basis = ElementBasis::build(m);
  std::mt19937_64 rng(6);
  SimState s = SimState::at_rest(m);
  s.positions = (test::random_rotation(rng) * m.nodes()).colwise() + Vec3(1, -2, 3);
  update_element_fields(m, basis, rubber(), s);
  for (const Mat3& sigma : s.elem_stress) EXPECT_LT(sigma.norm(), 1e-6);
  EXPECT_LT(strain_energy(s, m), 1e-14);
}

TEST(Fem, StrainEnergyMatchesElasticEnergy) {
  const TetMesh m = gen::box(Vec3(0.03, 0.02, 0.02), 3, 2, 2, 1000.0);
  const ElementBasis basis = ElementBasis::build(m);
  SimState s = SimState::at_rest(m);
  Mat3 A = Mat3::Identity();
  A(0, 1) = 0.01;
  A(2, 2) = 0.98;
  s.positions = A * m.nodes();
  update_element_fields(m, basis, rubber(), s);
  const double half = strain_energy(s, m, true);
  EXPECT_NEAR(half, elastic_energy(m, s.positions, basis, rubber()), 1e-12 * half);
  EXPECT_NEAR(strain_energy(s, m, false), 2.0 * half, 1e-12 * half);
}

TEST(Fem, ForcesAreNegativeEnergyGradient) {
  const TetMesh m = gen::box(Vec3(0.02, 0.02, 0.02), 2, 1, 1, 1000.0);
  const ElementBasis basis = ElementBasis::build(m);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1e-3);
  Positions x = m.nodes();
  for (int i = 0; i < x.size(); ++i) x(i) += n(rng);
  const Positions f = internal_forces(m, x, basis, rubber());
  const double h = 1e-7;
  for (int i = 0; i < x.size(); ++i) {
    Positions xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double g = (elastic_energy(m, xp, basis, rubber()) - elastic_energy(m, xm, basis, rubber())) / (2 * h);
    EXPECT_NEAR(f(i), -g, 1e-5 * f.norm());
  }
}
