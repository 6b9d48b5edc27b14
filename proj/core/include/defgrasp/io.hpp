#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "defgrasp/features.hpp"
#include "defgrasp/fem.hpp"
#include "defgrasp/metrics.hpp"

namespace defgrasp {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Writes `content` to a sibling temporary file and renames it over `path`.
/// Throws IoError on failure; a partial temporary is removed.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& data);

inline constexpr int kCsvSchemaVersion = 1;

/// Features CSV text: a `# schema_version=N` line, the fixed header, one row
/// per record. Invalid records leave the feature cells empty.
std::string features_csv(const std::vector<FeatureRecord>& rows);

struct MetricRow {
  int grasp_id = 0;
  std::string experiment;
  MetricRecord metrics;
};

/// Metrics CSV text; absent values are empty cells.
std::string metrics_csv(const std::vector<MetricRow>& rows);

/// Legacy ASCII VTK unstructured grid with deformed POINTS, tet CELLS,
/// CELL_DATA `von_mises` and POINT_DATA `deformation`.
std::string vtk_text(const TetMesh& mesh, const SimState& state, const Positions& deformation);
void export_vtk(const TetMesh& mesh, const SimState& state, const Positions& deformation,
                const std::filesystem::path& path);

/// Self-contained state snapshot: rest mesh, material and current positions.
struct Snapshot {
  Positions rest_nodes;
  std::vector<Tet> tets;
  ElasticParams params;
  Positions positions;
  double time = 0.0;
};

void write_snapshot(const Snapshot& snapshot, const std::filesystem::path& path);
/// Throws IoError when unreadable, ConfigError when malformed, MeshError for
/// invalid topology.
Snapshot read_snapshot(const std::filesystem::path& path);

/// Converts a snapshot to VTK, recomputing stresses and the rigid-removed
/// deformation against the rest nodes.
void snapshot_to_vtk(const Snapshot& snapshot, const std::filesystem::path& path);

}  // namespace defgrasp
