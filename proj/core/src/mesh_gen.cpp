#include "defgrasp/mesh_gen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace defgrasp::gen {

namespace {

using GridMap = std::function<Vec3(const Vec3&)>;

void orient_positive(const Positions& nodes, Tet& t) {
  if (signed_tet_volume(nodes.col(t[0]), nodes.col(t[1]), nodes.col(t[2]), nodes.col(t[3])) < 0) {
    std::swap(t[2], t[3]);
  }
}

// Structured grid over [lo, hi]^3-style parameter box, mapped node-wise. Each
// cell is split into the 6 Kuhn tets around the (0,0,0)-(1,1,1) diagonal, with
// orientation fixed on the parameter grid before mapping.
TetMesh mapped_grid(int nx, int ny, int nz, const Vec3& lo, const Vec3& hi, const GridMap& map,
                    double density) {
  if (nx < 1 || ny < 1 || nz < 1) throw MeshError("grid resolution must be >= 1");
  auto index = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };
  const int n = (nx + 1) * (ny + 1) * (nz + 1);
  Positions param(3, n);
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        const Vec3 s(double(i) / nx, double(j) / ny, double(k) / nz);
        param.col(index(i, j, k)) = lo + s.cwiseProduct(hi - lo);
      }

  static constexpr std::array<std::array<int, 3>, 6> kPerms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<Tet> tets;
  tets.reserve(6 * nx * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        for (const auto& perm : kPerms) {
          std::array<int, 3> c{i, j, k};
          Tet t;
          t[0] = index(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            t[s + 1] = index(c[0], c[1], c[2]);
          }
          orient_positive(param, t);
          tets.push_back(t);
        }
      }

  Positions nodes(3, n);
  for (int v = 0; v < n; ++v) nodes.col(v) = map(param.col(v));
  return TetMesh(std::move(nodes), std::move(tets), density);
}

// Elliptical square-to-disk map on [-1,1]^2.
Vec2 square_to_disk(double u, double v) {
  return {u * std::sqrt(std::max(0.0, 1.0 - 0.5 * v * v)),
          v * std::sqrt(std::max(0.0, 1.0 - 0.5 * u * u))};
}

}  // namespace

TetMesh unit_cube_5tet(double density) {
  Positions nodes(3, 8);
  for (int v = 0; v < 8; ++v) nodes.col(v) = Vec3(v & 1, (v >> 1) & 1, (v >> 2) & 1);
  std::vector<Tet> tets = {{0, 1, 2, 4}, {3, 1, 2, 7}, {5, 1, 4, 7}, {6, 2, 4, 7}, {1, 2, 4, 7}};
  for (Tet& t : tets) orient_positive(nodes, t);
  return TetMesh(std::move(nodes), std::move(tets), density);
}

TetMesh box(const Vec3& size, int nx, int ny, int nz, double density, const Vec3& origin) {
  return mapped_grid(nx, ny, nz, Vec3::Zero(), size,
                     [&](const Vec3& p) -> Vec3 { return p + origin; }, density);
}

TetMesh ellipsoid(const Vec3& radii, int n, double density, const Vec3& center) {
  return mapped_grid(
      n, n, n, Vec3::Constant(-1.0), Vec3::Constant(1.0),
      [&](const Vec3& p) -> Vec3 {
        const double x2 = p.x() * p.x(), y2 = p.y() * p.y(), z2 = p.z() * p.z();
        const Vec3 ball(p.x() * std::sqrt(std::max(0.0, 1 - y2 / 2 - z2 / 2 + y2 * z2 / 3)),
                        p.y() * std::sqrt(std::max(0.0, 1 - z2 / 2 - x2 / 2 + z2 * x2 / 3)),
                        p.z() * std::sqrt(std::max(0.0, 1 - x2 / 2 - y2 / 2 + x2 * y2 / 3)));
        return center + ball.cwiseProduct(radii);
      },
      density);
}

TetMesh cylinder(double radius, double length, int n_cross, int n_len, double density,
                 const Vec3& origin) {
  return mapped_grid(
      n_len, n_cross, n_cross, Vec3(0, -1, -1), Vec3(length, 1, 1),
      [&](const Vec3& p) -> Vec3 {
        const Vec2 d = square_to_disk(p.y(), p.z()) * radius;
        return origin + Vec3(p.x(), d.x(), d.y());
      },
      density);
}

TetMesh cone(double r0, double r1, double height, int n_cross, int n_len, double density,
             const Vec3& origin) {
  return mapped_grid(
      n_cross, n_cross, n_len, Vec3(-1, -1, 0), Vec3(1, 1, height),
      [&](const Vec3& p) -> Vec3 {
        const double r = r0 + (r1 - r0) * p.z() / height;
        const Vec2 d = square_to_disk(p.x(), p.y()) * r;
        return origin + Vec3(d.x(), d.y(), p.z());
      },
      density);
}

}  // namespace defgrasp::gen
