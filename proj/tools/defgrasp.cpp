// defgrasp command line: run experiments, sample grasps, export snapshots.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

#include "defgrasp/run.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kMesh = 3, kSimulation = 4, kIo = 5 };

// DEFGRASP_THREADS wins over --jobs when it parses as a positive integer.
int effective_jobs(int jobs) {
  const char* env = std::getenv("DEFGRASP_THREADS");
  if (!env || !*env) return jobs;
  try {
    std::size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used == std::string(env).size() && n > 0) return n;
  } catch (const std::exception&) {
  }
  throw defgrasp::ConfigError(std::string("DEFGRASP_THREADS must be a positive integer, got '") + env + "'");
}

int cmd_run(const std::string& config_path, int jobs) {
  const defgrasp::RunConfig config = defgrasp::load_run_config(config_path);
  const defgrasp::RunSummary s = defgrasp::run(config, effective_jobs(jobs), &std::cerr);
  for (const auto& dir : s.output_dirs) std::cout << "wrote " << dir.string() << '\n';
  if (s.simulation_errors > 0) {
    std::cerr << s.simulation_errors << " of " << s.grasps << " grasps hit a simulation error\n";
  }
  return kOk;
}

int cmd_sample(const std::string& config_path, const std::string& out) {
  defgrasp::RunConfig config = defgrasp::load_run_config(config_path);
  if (config.grasp_source.file || config.grasp_source.sampler_n <= 0) {
    throw defgrasp::ConfigError("sample needs 'grasps.sampler' with n > 0 in the configuration");
  }
  const defgrasp::TetMesh mesh = defgrasp::build_mesh(config);
  const defgrasp::SamplerResult res =
      defgrasp::sample_antipodal(defgrasp::TriSurface::of(mesh), config.grasp_source.sampler_n,
                                 config.friction, config.grasp_source.sampler_seed);
  defgrasp::write_grasp_csv(res.grasps, out);
  if (res.shortfall) {
    std::cerr << "note: found " << res.grasps.size() << " of " << config.grasp_source.sampler_n
              << " grasps after " << res.attempts << " attempts\n";
  }
  std::cout << "wrote " << res.grasps.size() << " grasps to " << out << '\n';
  return kOk;
}

int cmd_export_vtk(const std::string& state, const std::string& out) {
  defgrasp::snapshot_to_vtk(defgrasp::read_snapshot(state), out);
  std::cout << "wrote " << out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grasp evaluation on deformable tetrahedral objects"};
  app.set_version_flag("--version", defgrasp::tool_version());
  app.require_subcommand(1);

  std::string config_path, out_path, state_path;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "Evaluate grasps and write features, metrics and snapshots");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  run->add_option("--jobs", jobs, "Worker threads (DEFGRASP_THREADS overrides)")->check(CLI::PositiveNumber);

  auto* sample = app.add_subcommand("sample", "Sample antipodal grasps into a CSV file");
  sample->add_option("--config", config_path, "JSON run configuration")->required();
  sample->add_option("--out", out_path, "Output grasp CSV")->required();

  auto* vtk = app.add_subcommand("export-vtk", "Convert a state snapshot to legacy VTK");
  vtk->add_option("--state", state_path, "Snapshot JSON")->required();
  vtk->add_option("--out", out_path, "Output VTK file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config_path, jobs);
    if (*sample) return cmd_sample(config_path, out_path);
    if (*vtk) return cmd_export_vtk(state_path, out_path);
  } catch (const defgrasp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const defgrasp::MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return kMesh;
  } catch (const defgrasp::SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return kSimulation;
  } catch (const defgrasp::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const defgrasp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSimulation;
  }
  return kOk;
}
