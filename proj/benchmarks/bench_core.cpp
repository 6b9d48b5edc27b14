#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "defgrasp/experiments.hpp"
#include "defgrasp/mesh_gen.hpp"
#include "defgrasp/sampler.hpp"

using namespace defgrasp;

namespace {

std::shared_ptr<const TetMesh> cube(int n) {
  return std::make_shared<const TetMesh>(
      gen::box(Vec3(0.04, 0.04, 0.04), n, n, n, 1000.0, Vec3(-0.02, -0.02, 0.0)));
}

GraspCandidate centered_grasp() {
  GraspCandidate g;
  g.pose.position = Vec3(0.0, 0.0, 0.02);
  g.pose.orientation = Quat(Eigen::AngleAxisd(EIGEN_PI, Vec3::UnitX()));
  g.initial_separation = 0.05;
  return g;
}

}  // namespace

static void BM_InternalForces(benchmark::State& state) {
  const auto mesh = cube(static_cast<int>(state.range(0)));
  const ElementBasis basis = ElementBasis::build(*mesh);
  const ElasticParams p = ElasticParams::from_young_poisson(2e5, 0.3, 1000.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1e-4);
  Positions x = mesh->nodes();
  for (int i = 0; i < x.size(); ++i) x(i) += n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(internal_forces(*mesh, x, basis, p));
  state.SetItemsProcessed(state.iterations() * mesh->num_tets());
}
BENCHMARK(BM_InternalForces)->Arg(4)->Arg(8)->Arg(12);

static void BM_ImplicitStepFreeFall(benchmark::State& state) {
  const auto mesh = cube(static_cast<int>(state.range(0)));
  ImplicitIntegrator integrator(mesh, ElasticParams::from_young_poisson(2e5, 0.3, 1000.0));
  SimState s = SimState::at_rest(*mesh);
  StepInputs in;
  in.gravity = Vec3(0, 0, -9.81);
  for (auto _ : state) integrator.step(s, in);
}
BENCHMARK(BM_ImplicitStepFreeFall)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_GraspStep(benchmark::State& state) {
  ExperimentConfig config;
  const SqueezedGrasp s = squeeze_grasp(cube(4), ElasticParams::from_young_poisson(2e6, 0.3, 1000.0), 0.7,
                                        centered_grasp(), config);
  GraspSimulation sim = s.sim;
  for (auto _ : state) sim.step();
}
BENCHMARK(BM_GraspStep)->Unit(benchmark::kMillisecond);

static void BM_AntipodalSampler(benchmark::State& state) {
  const TriSurface surface = TriSurface::of(gen::ellipsoid(Vec3(0.03, 0.02, 0.02), 6, 1000.0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_antipodal(surface, 50, 0.7, seed++));
}
BENCHMARK(BM_AntipodalSampler)->Unit(benchmark::kMillisecond);

static void BM_DeformationField(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  Positions pre(3, state.range(0));
  for (int i = 0; i < pre.cols(); ++i) pre.col(i) = Vec3(u(rng), u(rng), u(rng));
  const Positions post = (Eigen::AngleAxisd(0.3, Vec3(1, 2, 3).normalized()).toRotationMatrix() * pre).colwise() +
                         Vec3(0.1, 0.0, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(deformation_field(pre, post));
}
BENCHMARK(BM_DeformationField)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
