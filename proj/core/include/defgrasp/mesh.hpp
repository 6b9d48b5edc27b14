#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "defgrasp/types.hpp"

namespace defgrasp {

using Tet = std::array<int, 4>;
using Tri = std::array<int, 3>;

/// Tetrahedral volume mesh with derived surface, rest volumes and lumped masses.
///
/// Construction validates the input: every tet must have positive signed volume,
/// all indices must be in range, every node must be referenced and the element
/// graph must form a single connected component. Instances are immutable and may
/// be shared read-only between simulations.
class TetMesh {
 public:
  /// Throws MeshError on any validation failure.
  TetMesh(Positions nodes, std::vector<Tet> tets, double density);

  const Positions& nodes() const { return nodes_; }
  Vec3 node(int i) const { return nodes_.col(i); }
  const std::vector<Tet>& tets() const { return tets_; }
  const std::vector<Tri>& surface_tris() const { return surface_tris_; }
  /// Sorted, unique node indices touched by surface triangles.
  const std::vector<int>& surface_nodes() const { return surface_nodes_; }
  const std::vector<double>& elem_volumes() const { return elem_volumes_; }
  const std::vector<double>& node_masses() const { return node_masses_; }

  int num_nodes() const { return static_cast<int>(nodes_.cols()); }
  int num_tets() const { return static_cast<int>(tets_.size()); }
  double density() const { return density_; }
  double total_mass() const { return total_mass_; }
  double total_volume() const { return total_volume_; }

  /// Center of mass of the rest configuration (uniform density).
  Vec3 rest_center_of_mass() const;
  /// Mean edge length over surface triangles.
  double mean_surface_edge() const { return mean_surface_edge_; }
  /// Axis-aligned bounds of the rest nodes.
  Vec3 bounds_min() const { return nodes_.rowwise().minCoeff(); }
  Vec3 bounds_max() const { return nodes_.rowwise().maxCoeff(); }

 private:
  Positions nodes_;
  std::vector<Tet> tets_;
  std::vector<Tri> surface_tris_;
  std::vector<int> surface_nodes_;
  std::vector<double> elem_volumes_;
  std::vector<double> node_masses_;
  double density_ = 0.0;
  double total_mass_ = 0.0;
  double total_volume_ = 0.0;
  double mean_surface_edge_ = 0.0;
};

/// Signed volume det([p1-p0, p2-p0, p3-p0]) / 6.
double signed_tet_volume(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3);

/// Unsigned element volume; degenerate tets give 0.
double element_volume(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3);

/// Faces referenced by exactly one tet, oriented with outward normals.
std::vector<Tri> extract_surface(const Positions& nodes, const std::vector<Tet>& tets);

/// Loads a Gmsh ASCII v2.2 file (.msh) or the plain `.tet` format, chosen by
/// extension. Throws MeshError for parse or validation failures.
TetMesh load_mesh(const std::filesystem::path& path, double density);

TetMesh parse_gmsh(std::istream& in, double density);
TetMesh parse_tet(std::istream& in, double density);

/// Writes the plain `.tet` format.
void save_tet(const TetMesh& mesh, const std::filesystem::path& path);

}  // namespace defgrasp
