#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "defgrasp/mesh.hpp"
#include "defgrasp/simulation.hpp"

namespace defgrasp::test {

/// Box [0,size] of nx*ny*nz cells, each split into 5 tets with alternating
/// parity so that shared faces match (5 * nx * ny * nz tets).
TetMesh box_5tet(const Vec3& size, int nx, int ny, int nz, double density);

/// Uniformly distributed rotation.
Mat3 random_rotation(std::mt19937_64& rng);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// 0.04 m cube resting on z = 0, 4x4x4 cells (384 tets), rho = 1000.
std::shared_ptr<const TetMesh> small_cube();

/// Top-down grasp of the small cube through its center: squeeze axis along
/// world x, approach -z, pads 0.05 apart.
GraspCandidate centered_cube_grasp();

}  // namespace defgrasp::test
