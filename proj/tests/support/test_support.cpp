#include "test_support.hpp"

#include <atomic>
#include <utility>

#include "defgrasp/mesh_gen.hpp"

namespace defgrasp::test {

TetMesh box_5tet(const Vec3& size, int nx, int ny, int nz, double density) {
  const auto id = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };
  Positions nodes(3, (nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        nodes.col(id(i, j, k)) = Vec3(size.x() * i / nx, size.y() * j / ny, size.z() * k / nz);

  // Corner bit b: x = b & 1, y = b & 2, z = b & 4.
  static constexpr int kEven[5][4] = {{1, 2, 4, 7}, {0, 1, 2, 4}, {3, 1, 2, 7}, {5, 1, 4, 7}, {6, 2, 4, 7}};
  static constexpr int kOdd[5][4] = {{0, 3, 5, 6}, {1, 0, 3, 5}, {2, 0, 3, 6}, {4, 0, 5, 6}, {7, 3, 5, 6}};
  std::vector<Tet> tets;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        int corner[8];
        for (int b = 0; b < 8; ++b) corner[b] = id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
        const auto& split = (i + j + k) % 2 == 0 ? kEven : kOdd;
        for (const auto& t : split) {
          Tet tet{corner[t[0]], corner[t[1]], corner[t[2]], corner[t[3]]};
          if (signed_tet_volume(nodes.col(tet[0]), nodes.col(tet[1]), nodes.col(tet[2]),
                                nodes.col(tet[3])) < 0) {
            std::swap(tet[2], tet[3]);
          }
          tets.push_back(tet);
        }
      }
  return TetMesh(std::move(nodes), std::move(tets), density);
}

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("defgrasp_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::shared_ptr<const TetMesh> small_cube() {
  static const auto mesh = std::make_shared<const TetMesh>(
      gen::box(Vec3(0.04, 0.04, 0.04), 4, 4, 4, 1000.0, Vec3(-0.02, -0.02, 0.0)));
  return mesh;
}

GraspCandidate centered_cube_grasp() {
  GraspCandidate g;
  g.pose.position = Vec3(0.0, 0.0, 0.02);
  g.pose.orientation = Quat(Eigen::AngleAxisd(EIGEN_PI, Vec3::UnitX()));
  g.initial_separation = 0.05;
  return g;
}

}  // namespace defgrasp::test
