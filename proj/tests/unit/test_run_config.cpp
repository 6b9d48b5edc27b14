#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "defgrasp/run.hpp"
#include "test_support.hpp"

using namespace defgrasp;

namespace {

const char* kMinimal = R"({
  "mesh": {"primitive": "box", "size": [0.04, 0.04, 0.04], "cells": 4},
  "grasps": {"sampler": {"n": 3, "seed": 5}}
})";

// Fast configuration: two linear ramps only.
std::string ramp_config(const std::string& youngs, const std::string& out) {
  return R"({
    "mesh": {"primitive": "box", "size": [0.04, 0.04, 0.04], "cells": 4},
    "material": {"youngs_modulus": )" + youngs + R"(},
    "grasps": {"file": "grasps.csv"},
    "experiments": {"which": ["lin_acc"], "direction_set": [[0, 1, 0], [0, -1, 0]], "squeeze_force": 1.0},
    "output_dir": ")" + out + R"("
  })";
}

}  // namespace

TEST(RunConfig, DefaultsAndPrimitive) {
  const RunConfig c = parse_run_config(kMinimal, "/base");
  ASSERT_TRUE(c.primitive.has_value());
  EXPECT_EQ(c.primitive->kind, "box");
  EXPECT_EQ(c.youngs_moduli, std::vector<double>{2e5});
  EXPECT_EQ(c.friction, 0.7);
  EXPECT_EQ(c.grasp_source.sampler_n, 3);
  EXPECT_EQ(c.grasp_source.sampler_seed, 5u);
  EXPECT_TRUE(c.experiments.pickup && c.experiments.reorient && c.experiments.lin_acc && c.experiments.ang_acc);
}

TEST(RunConfig, RelativePathsResolveAgainstBaseDir) {
  const RunConfig c = parse_run_config(
      R"({"mesh": "obj/m.tet", "grasps": {"file": "g.csv"}, "output_dir": "out"})", "/base");
  EXPECT_EQ(*c.mesh_path, std::filesystem::path("/base/obj/m.tet"));
  EXPECT_EQ(*c.grasp_source.file, std::filesystem::path("/base/g.csv"));
  EXPECT_EQ(c.output_dir, std::filesystem::path("/base/out"));
}

TEST(RunConfig, FullSchema) {
  const RunConfig c = parse_run_config(R"({
    "mesh": {"primitive": "cylinder", "radius": 0.01, "length": 0.12, "cells": 2, "cells_long": 12},
    "material": {"density": 1100, "youngs_modulus": [2e4, 2e5], "poisson": 0.35, "friction": 0.5},
    "simulation": {"gravity": 9.8, "dt": 0.001, "contact_stiffness_scale": 5},
    "grasps": {"sampler": {"n": 2}},
    "experiments": {"which": ["pickup", "ang_acc"], "hold_time": 2, "lin_limit": 40,
                    "reorient_angles": [1.0], "reorient_control_state": true, "squeeze_force": 2.5},
    "snapshot_stride": 0.5,
    "strain_energy_half_factor": false
  })");
  EXPECT_EQ(c.density, 1100);
  EXPECT_EQ(c.youngs_moduli, (std::vector<double>{2e4, 2e5}));
  EXPECT_EQ(c.poisson, 0.35);
  EXPECT_EQ(c.dt, 0.001);
  EXPECT_EQ(c.contact_stiffness_scale, 5);
  EXPECT_TRUE(c.experiments.pickup);
  EXPECT_FALSE(c.experiments.reorient);
  EXPECT_FALSE(c.experiments.lin_acc);
  EXPECT_TRUE(c.experiments.ang_acc);
  EXPECT_EQ(c.experiments.hold_time, 2);
  EXPECT_EQ(*c.experiments.squeeze_force, 2.5);
  EXPECT_EQ(c.experiments.snapshot_stride, 0.5);
  EXPECT_FALSE(c.strain_energy_half_factor);
}

TEST(RunConfig, RejectsInvalidConfigurations) {
  const auto rejects = [](const std::string& text) { EXPECT_THROW(parse_run_config(text), ConfigError) << text; };
  rejects("{");
  rejects(R"({"grasps": {"sampler": {"n": 1}}})");
  rejects(R"({"mesh": {"primitive": "box"}})");
  rejects(R"({"mesh": {"primitive": "box"}, "grasps": {"sampler": {"n": 1}}, "extra": 1})");
  rejects(R"({"mesh": {"primitive": "box", "colour": 1}, "grasps": {"sampler": {"n": 1}}})");
  rejects(R"({"mesh": {"primitive": "torus"}, "grasps": {"sampler": {"n": 1}}})");
  rejects(R"({"mesh": {"primitive": "box"}, "grasps": {"sampler": {"n": 1}, "file": "g.csv"}})");
  rejects(R"({"mesh": {"primitive": "box"}, "grasps": {"sampler": {"n": -1}}})");
  rejects(R"({"mesh": {"primitive": "box"}, "material": {"poisson": 0.5}, "grasps": {"sampler": {"n": 1}}})");
  rejects(R"({"mesh": {"primitive": "box"}, "material": {"friction": 0}, "grasps": {"sampler": {"n": 1}}})");
  rejects(R"({"mesh": {"primitive": "box"}, "material": {"youngs_modulus": []}, "grasps": {"sampler": {"n": 1}}})");
  rejects(R"({"mesh": {"primitive": "box"}, "simulation": {"dt": 0}, "grasps": {"sampler": {"n": 1}}})");
  rejects(R"({"mesh": {"primitive": "box"}, "grasps": {"sampler": {"n": 1}}, "experiments": {"which": ["fly"]}})");
  rejects(R"({"mesh": {"primitive": "box"}, "grasps": {"sampler": {"n": 1}}, "experiments": {"lowering_distance": 0}})");
  rejects(R"({"mesh": {"primitive": "box"}, "grasps": {"sampler": {"n": 1}}, "experiments": {"direction_set": [[1, 0, 0]]}})");
  rejects(R"({"mesh": {"primitive": "box"}, "grasps": {"sampler": {"n": "three"}}})");
}

TEST(RunConfig, MissingFileIsConfigError) {
  EXPECT_THROW(load_run_config("/nonexistent/defgrasp.json"), ConfigError);
}

TEST(RunConfig, HashTracksResultAffectingFields) {
  const RunConfig a = parse_run_config(kMinimal);
  RunConfig b = a;
  b.output_dir = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.youngs_moduli = {2e6};
  EXPECT_NE(a.hash(), b.hash());
  RunConfig c = a;
  c.experiments.lin_limit = 40.0;
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.canonical_json(), parse_run_config(kMinimal).canonical_json());
}

TEST(RunConfig, PrimitivesRestOnTheGround) {
  for (const char* mesh : {R"({"primitive": "box", "cells": 2})", R"({"primitive": "ellipsoid", "cells": 4})",
                           R"({"primitive": "cylinder", "cells": 2, "cells_long": 4})",
                           R"({"primitive": "cone", "radius": 0.02, "tip_radius": 0.01, "length": 0.03, "cells": 2, "cells_long": 3})"}) {
    const RunConfig c = parse_run_config(std::string(R"({"mesh": )") + mesh + R"(, "grasps": {"sampler": {"n": 1}}})");
    const TetMesh m = build_mesh(c);
    EXPECT_NEAR(m.bounds_min().z(), 0.0, 1e-12) << mesh;
  }
}

TEST(RunConfig, MeshFileErrorsAreMeshErrors) {
  test::TempDir dir("runmesh");
  std::ofstream(dir.path() / "bad.tet") << "tet 4 1\n0 0 0\n";
  const RunConfig c = parse_run_config(R"({"mesh": "bad.tet", "grasps": {"sampler": {"n": 1}}})", dir.path());
  EXPECT_THROW(build_mesh(c), MeshError);
}

TEST(RunConfig, LoadGraspsFromSamplerAndFile) {
  const RunConfig c = parse_run_config(kMinimal);
  const TetMesh m = build_mesh(c);
  bool shortfall = true;
  const auto sampled = load_grasps(c, m, &shortfall);
  EXPECT_EQ(sampled.size(), 3u);
  EXPECT_FALSE(shortfall);
  test::TempDir dir("rungrasps");
  write_grasp_csv(sampled, dir.path() / "g.csv");
  const RunConfig f = parse_run_config(R"({"mesh": {"primitive": "box"}, "grasps": {"file": "g.csv"}})", dir.path());
  EXPECT_EQ(load_grasps(f, m).size(), 3u);
}

TEST(Run, WritesDatasetsAndManifest) {
  test::TempDir dir("run");
  GraspCandidate a = test::centered_cube_grasp();
  GraspCandidate b = a;
  b.id = 1;
  b.pose.position.y() = 0.004;
  write_grasp_csv({a, b}, dir.path() / "grasps.csv");
  const RunConfig c = parse_run_config(ramp_config("2e6", "out"), dir.path());
  std::ostringstream log;
  const RunSummary s = run(c, 1, &log);
  EXPECT_EQ(s.grasps, 2);
  EXPECT_EQ(s.simulation_errors, 0);
  ASSERT_EQ(s.output_dirs.size(), 1u);
  const std::string features = read_file(dir.path() / "out" / "features.csv");
  const std::string metrics = read_file(dir.path() / "out" / "metrics.csv");
  const std::string manifest = read_file(dir.path() / "out" / "manifest.json");
  EXPECT_EQ(std::count(features.begin(), features.end(), '\n'), 4);
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 4);
  EXPECT_NE(metrics.find("0,lin_acc,"), std::string::npos);
  EXPECT_NE(manifest.find("\"config_hash\""), std::string::npos);
  EXPECT_NE(manifest.find("\"version\""), std::string::npos);
  EXPECT_FALSE(log.str().empty());

  // Two workers give the same bytes as one.
  const RunConfig c2 = parse_run_config(ramp_config("2e6", "out2"), dir.path());
  run(c2, 2);
  EXPECT_EQ(read_file(dir.path() / "out2" / "features.csv"), features);
  EXPECT_EQ(read_file(dir.path() / "out2" / "metrics.csv"), metrics);
}

TEST(Run, ModulusSweepWritesOneDirectoryPerValue) {
  test::TempDir dir("sweep");
  write_grasp_csv({test::centered_cube_grasp()}, dir.path() / "grasps.csv");
  const RunConfig c = parse_run_config(ramp_config("[1e6, 2e6]", "sweep"), dir.path());
  const RunSummary s = run(c, 1);
  ASSERT_EQ(s.output_dirs.size(), 2u);
  for (const char* sub : {"E_1e+06", "E_2e+06"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "sweep" / sub / "metrics.csv")) << sub;
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "sweep" / sub / "manifest.json")) << sub;
  }
}

TEST(Run, FailedSqueezeIsRecordedNotThrown) {
  test::TempDir dir("runfail");
  GraspCandidate far = test::centered_cube_grasp();
  far.pose.position = Vec3(0.5, 0.5, 0.02);  // nothing between the fingers
  write_grasp_csv({far}, dir.path() / "grasps.csv");
  RunConfig c = parse_run_config(ramp_config("2e6", "out"), dir.path());
  c.experiments.controller.time_budget = 0.3;
  run(c, 1);
  const std::string features = read_file(dir.path() / "out" / "features.csv");
  EXPECT_NE(features.find("\n0,,,,,,,,\n"), std::string::npos);
  const std::string manifest = read_file(dir.path() / "out" / "manifest.json");
  EXPECT_NE(manifest.find("\"failed\""), std::string::npos);
}
