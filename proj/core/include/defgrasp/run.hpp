#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "defgrasp/experiments.hpp"
#include "defgrasp/io.hpp"
#include "defgrasp/sampler.hpp"

namespace defgrasp {

/// Built-in mesh generator parameters, an alternative to a mesh file.
struct PrimitiveSpec {
  std::string kind;  // box | ellipsoid | cylinder | cone
  Vec3 size = Vec3(0.04, 0.04, 0.04);  // box edge lengths or ellipsoid semi-axes
  double radius = 0.01;                // cylinder radius, cone base radius
  double tip_radius = 0.0;             // cone
  double length = 0.1;                 // cylinder length, cone height
  int cells = 4;                       // cells per axis or across the section
  int cells_long = 10;                 // cylinder and cone cells along the axis
};

struct GraspSource {
  std::optional<std::filesystem::path> file;
  int sampler_n = 0;
  std::uint64_t sampler_seed = 0;
};

struct RunConfig {
  std::optional<std::filesystem::path> mesh_path;
  std::optional<PrimitiveSpec> primitive;
  double density = 1000.0;
  std::vector<double> youngs_moduli{2e5};  // more than one value runs a sweep
  double poisson = 0.3;
  double friction = 0.7;
  double gravity = 9.81;
  double dt = 1.0 / 1500.0;
  double contact_stiffness_scale = 10.0;
  GraspSource grasp_source;
  ExperimentConfig experiments;
  std::filesystem::path output_dir = "defgrasp_out";
  bool strain_energy_half_factor = true;

  /// Normalized JSON of every field that affects results (output_dir excluded).
  std::string canonical_json() const;
  std::uint64_t hash() const { return fnv1a64(canonical_json()); }
  /// Throws ConfigError when a physical parameter or the grasp source is invalid.
  void validate() const;
};

/// Parses the JSON run configuration. Relative paths resolve against
/// `base_dir`. Throws ConfigError on syntax errors, unknown keys or invalid
/// values.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Loads or generates the object mesh. Throws MeshError.
TetMesh build_mesh(const RunConfig& config);

SimulationSettings simulation_settings(const RunConfig& config);

/// Grasps from the configured file or sampler. Sampler shortfalls are
/// reported through `shortfall` when given.
std::vector<GraspCandidate> load_grasps(const RunConfig& config, const TetMesh& mesh,
                                        bool* shortfall = nullptr);

struct ExperimentStatus {
  std::string name;
  bool ok = false;
  std::string reason;
  double wall_seconds = 0.0;
  std::optional<int> censored;
};

struct GraspEvaluation {
  GraspCandidate grasp;
  SqueezeTelemetry telemetry;
  FeatureRecord features;
  std::vector<MetricRow> metric_rows;
  std::vector<ExperimentStatus> status;
  bool simulation_error = false;
};

/// Squeeze, features and every selected experiment for one grasp. Simulation
/// errors are caught and recorded. When `snapshot_dir` is set, pickup
/// snapshots are written there as VTK and the final pickup state as a
/// snapshot file.
GraspEvaluation evaluate_grasp(std::shared_ptr<const TetMesh> mesh, const ElasticParams& params,
                               const RunConfig& config, const GraspCandidate& grasp,
                               const std::optional<std::filesystem::path>& snapshot_dir = {});

struct RunSummary {
  int grasps = 0;
  int simulation_errors = 0;
  std::vector<std::filesystem::path> output_dirs;
};

/// Evaluates all grasps with up to `jobs` worker threads and writes
/// features.csv, metrics.csv, manifest.json and snapshots/ into the output
/// directory, or into one `E_<value>` subdirectory per modulus in sweep mode.
RunSummary run(const RunConfig& config, int jobs, std::ostream* log = nullptr);

std::string tool_version();

}  // namespace defgrasp
