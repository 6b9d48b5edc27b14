#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "defgrasp/io.hpp"
#include "defgrasp/mesh_gen.hpp"
#include "defgrasp/sampler.hpp"
#include "test_support.hpp"

using namespace defgrasp;

namespace {

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + DEFGRASP_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSampleConfig = R"({
  "mesh": {"primitive": "ellipsoid", "size": [0.03, 0.02, 0.02], "cells": 4},
  "grasps": {"sampler": {"n": 4, "seed": 1}}
})";

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("fly"), 2);
  EXPECT_EQ(cli("run"), 2);
  EXPECT_EQ(cli("run --config x.json --jobs 0"), 2);
}

TEST(Cli, ConfigErrorsExitTwo) {
  test::TempDir dir("cli_config");
  EXPECT_EQ(cli("run --config " + quoted(dir.path() / "missing.json")), 2);
  write(dir.path() / "bad.json", "{\"mesh\": ");
  EXPECT_EQ(cli("run --config " + quoted(dir.path() / "bad.json")), 2);
  write(dir.path() / "ok.json", kSampleConfig);
  EXPECT_EQ(cli("sample --config " + quoted(dir.path() / "ok.json") + " --out " + quoted(dir.path() / "g.csv"),
                "DEFGRASP_THREADS=1"),
            0);
  EXPECT_EQ(cli("run --config " + quoted(dir.path() / "ok.json"), "DEFGRASP_THREADS=zero"), 2);
}

TEST(Cli, MeshErrorsExitThree) {
  test::TempDir dir("cli_mesh");
  write(dir.path() / "bad.tet", "tet 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 2 1 3\n");
  write(dir.path() / "cfg.json", R"({"mesh": "bad.tet", "grasps": {"sampler": {"n": 1}}})");
  EXPECT_EQ(cli("run --config " + quoted(dir.path() / "cfg.json")), 3);
  EXPECT_EQ(cli("sample --config " + quoted(dir.path() / "cfg.json") + " --out " + quoted(dir.path() / "g.csv")), 3);
}

TEST(Cli, IoErrorsExitFive) {
  test::TempDir dir("cli_io");
  EXPECT_EQ(cli("export-vtk --state " + quoted(dir.path() / "none.json") + " --out " + quoted(dir.path() / "o.vtk")), 5);
  write(dir.path() / "ok.json", kSampleConfig);
  EXPECT_EQ(cli("sample --config " + quoted(dir.path() / "ok.json") + " --out " +
                quoted(dir.path() / "missing_dir" / "g.csv")),
            5);
}

TEST(Cli, SampleWritesGraspFile) {
  test::TempDir dir("cli_sample");
  write(dir.path() / "cfg.json", kSampleConfig);
  ASSERT_EQ(cli("sample --config " + quoted(dir.path() / "cfg.json") + " --out " + quoted(dir.path() / "g.csv")), 0);
  EXPECT_EQ(read_grasp_csv(dir.path() / "g.csv").size(), 4u);
}

TEST(Cli, SampleShortfallStillSucceeds) {
  test::TempDir dir("cli_short");
  write(dir.path() / "cfg.json", R"({"mesh": {"primitive": "box", "size": [0.12, 0.12, 0.12], "cells": 2},
                                     "grasps": {"sampler": {"n": 2}}})");
  ASSERT_EQ(cli("sample --config " + quoted(dir.path() / "cfg.json") + " --out " + quoted(dir.path() / "g.csv")), 0);
  EXPECT_TRUE(read_grasp_csv(dir.path() / "g.csv").empty());
}

TEST(Cli, ExportVtkFromSnapshot) {
  test::TempDir dir("cli_vtk");
  const TetMesh m = gen::box(Vec3(0.02, 0.02, 0.02), 1, 1, 1, 1000.0);
  write_snapshot({m.nodes(), m.tets(), ElasticParams::from_young_poisson(1e5, 0.3, 1000.0), m.nodes(), 0.0},
                 dir.path() / "s.json");
  ASSERT_EQ(cli("export-vtk --state " + quoted(dir.path() / "s.json") + " --out " + quoted(dir.path() / "s.vtk")), 0);
  EXPECT_NE(read_file(dir.path() / "s.vtk").find("CELL_TYPES 6"), std::string::npos);
  write(dir.path() / "bad.json", R"({"format": "defgrasp-snapshot"})");
  EXPECT_EQ(cli("export-vtk --state " + quoted(dir.path() / "bad.json") + " --out " + quoted(dir.path() / "b.vtk")), 2);
}

TEST(Cli, RunHonoursThreadOverride) {
  test::TempDir dir("cli_run");
  write_grasp_csv({test::centered_cube_grasp()}, dir.path() / "grasps.csv");
  write(dir.path() / "cfg.json", R"({
    "mesh": {"primitive": "box", "size": [0.04, 0.04, 0.04], "cells": 4},
    "material": {"youngs_modulus": 2e6},
    "grasps": {"file": "grasps.csv"},
    "experiments": {"which": ["lin_acc"], "direction_set": [[0, 1, 0], [0, -1, 0]], "squeeze_force": 1.0},
    "output_dir": "out"
  })");
  ASSERT_EQ(cli("run --config " + quoted(dir.path() / "cfg.json") + " --jobs 1", "DEFGRASP_THREADS=2"), 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / "metrics.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / "manifest.json"));
}
