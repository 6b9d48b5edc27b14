#include "defgrasp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "defgrasp/io.hpp"

namespace defgrasp {

TriSurface TriSurface::of(const TetMesh& mesh) {
  return TriSurface{mesh.nodes(), mesh.surface_tris()};
}

Vec3 TriSurface::face_normal(int tri) const {
  const Tri& t = tris[tri];
  const Vec3 a = vertices.col(t[0]);
  return (vertices.col(t[1]) - a).cross(vertices.col(t[2]) - a).normalized();
}

double TriSurface::face_area(int tri) const {
  const Tri& t = tris[tri];
  const Vec3 a = vertices.col(t[0]);
  return 0.5 * (vertices.col(t[1]) - a).cross(vertices.col(t[2]) - a).norm();
}

SurfaceSampler::SurfaceSampler(const TriSurface& surface) : surface_(&surface) {
  if (surface.tris.empty()) throw MeshError("surface has no triangles");
  cumulative_area_.reserve(surface.tris.size());
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(surface.tris.size()); ++i) {
    total += surface.face_area(i);
    cumulative_area_.push_back(total);
  }
  if (!(total > 0.0)) throw MeshError("surface has zero area");
}

SurfaceSample SurfaceSampler::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double target = uni(rng) * cumulative_area_.back();
  auto it = std::upper_bound(cumulative_area_.begin(), cumulative_area_.end(), target);
  if (it == cumulative_area_.end()) --it;
  const int tri = static_cast<int>(it - cumulative_area_.begin());
  // Uniform point in the triangle.
  const double r1 = std::sqrt(uni(rng));
  const double r2 = uni(rng);
  const Tri& t = surface_->tris[tri];
  SurfaceSample s;
  s.point = (1.0 - r1) * surface_->vertices.col(t[0]) + r1 * (1.0 - r2) * surface_->vertices.col(t[1]) +
            r1 * r2 * surface_->vertices.col(t[2]);
  s.normal = surface_->face_normal(tri);
  s.tri = tri;
  return s;
}

std::optional<RayHit> raycast(const TriSurface& surface, const Vec3& origin, const Vec3& dir,
                              double min_distance) {
  std::optional<RayHit> best;
  for (int i = 0; i < static_cast<int>(surface.tris.size()); ++i) {
    const Tri& t = surface.tris[i];
    const Vec3 a = surface.vertices.col(t[0]);
    const Vec3 e1 = surface.vertices.col(t[1]) - a;
    const Vec3 e2 = surface.vertices.col(t[2]) - a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-300) continue;
    const double inv = 1.0 / det;
    const Vec3 s = origin - a;
    const double u = s.dot(p) * inv;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < 0.0 || u + v > 1.0) continue;
    const double dist = e2.dot(q) * inv;
    if (dist <= min_distance) continue;
    if (!best || dist < best->distance) {
      best = RayHit{origin + dist * dir, surface.face_normal(i), dist, i};
    }
  }
  return best;
}

bool is_antipodal(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2, double mu) {
  const Vec3 axis = (p2 - p1).normalized();
  const double cos_cone = std::cos(std::atan(mu));
  return -n1.normalized().dot(axis) >= cos_cone && n2.normalized().dot(axis) >= cos_cone;
}

bool pads_intersect(const TriSurface& surface, const RigidTransform& pose, double separation,
                    const PadGeometry& pad) {
  const double half = 0.5 * separation;
  for (int v = 0; v < surface.vertices.cols(); ++v) {
    const Vec3 q = pose.inverse_apply(surface.vertices.col(v));
    if (std::abs(q.y()) >= 0.5 * pad.width || std::abs(q.z()) >= 0.5 * pad.length) continue;
    const double ax = std::abs(q.x());
    if (ax > half && ax < half + pad.thickness) return true;
  }
  return false;
}

SamplerResult sample_antipodal(const TriSurface& surface, int n, double mu, std::uint64_t seed,
                               const SamplerSettings& settings) {
  if (n < 0) throw ConfigError("grasp count must be non-negative");
  if (mu < 0.0) throw ConfigError("friction coefficient must be non-negative");
  SamplerResult result;
  if (n == 0) return result;
  const SurfaceSampler sampler(surface);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> roll_dist(0.0, 2.0 * std::numbers::pi);
  const int max_attempts = settings.attempts_per_grasp * n;
  while (static_cast<int>(result.grasps.size()) < n && result.attempts < max_attempts) {
    ++result.attempts;
    const SurfaceSample s1 = sampler.sample(rng);
    // The roll is drawn every attempt so the random stream does not depend
    // on which tests pass.
    const double roll = roll_dist(rng);
    const auto hit = raycast(surface, s1.point, -s1.normal);
    if (!hit) continue;
    const Vec3 p1 = s1.point;
    const Vec3 p2 = hit->point;
    const double width = (p2 - p1).norm();
    if (!(width > 0.0) || width > settings.max_opening) continue;
    if (!is_antipodal(p1, s1.normal, p2, hit->normal, mu)) continue;

    const Vec3 x = (p2 - p1) / width;
    // Any unit vector orthogonal to x, then rolled about x.
    const Vec3 helper = std::abs(x.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitY();
    const Vec3 z0 = (helper - helper.dot(x) * x).normalized();
    const Vec3 z = Eigen::AngleAxisd(roll, x) * z0;
    Mat3 rot;
    rot.col(0) = x;
    rot.col(1) = z.cross(x);
    rot.col(2) = z;
    GraspCandidate g;
    g.id = static_cast<int>(result.grasps.size());
    g.pose.position = 0.5 * (p1 + p2);
    g.pose.orientation = Quat(rot).normalized();
    g.initial_separation = std::min(settings.max_opening, width + 2.0 * settings.clearance);
    if (pads_intersect(surface, g.pose, g.initial_separation, settings.pad)) continue;
    result.grasps.push_back(g);
  }
  result.shortfall = static_cast<int>(result.grasps.size()) < n;
  return result;
}

void write_grasp_csv(const std::vector<GraspCandidate>& grasps, const std::filesystem::path& path) {
  std::string out = "id,px,py,pz,qx,qy,qz,qw,separation\n";
  for (const GraspCandidate& g : grasps) {
    const Quat& q = g.pose.orientation;
    out += std::to_string(g.id);
    for (double v : {g.pose.position.x(), g.pose.position.y(), g.pose.position.z(), q.x(), q.y(),
                     q.z(), q.w(), g.initial_separation}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<GraspCandidate> read_grasp_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grasp file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("grasp file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,px,py,pz,qx,qy,qz,qw,separation") {
    throw ConfigError("unexpected grasp file header: " + line);
  }
  std::vector<GraspCandidate> grasps;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    int id = 0;
    for (int col = 0; std::getline(ss, cell, ','); ++col) {
      try {
        std::size_t used = 0;
        if (col == 0) {
          id = std::stoi(cell, &used);
        } else {
          v.push_back(std::stod(cell, &used));
        }
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("grasp file line " + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
    }
    if (v.size() != 8) {
      throw ConfigError("grasp file line " + std::to_string(line_no) + ": expected 9 columns");
    }
    GraspCandidate g;
    g.id = id;
    g.pose.position = Vec3(v[0], v[1], v[2]);
    Quat q(v[6], v[3], v[4], v[5]);
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      throw ConfigError("grasp file line " + std::to_string(line_no) + ": quaternion not unit");
    }
    g.pose.orientation = q.normalized();
    g.initial_separation = v[7];
    if (!(g.initial_separation > 0.0)) {
      throw ConfigError("grasp file line " + std::to_string(line_no) + ": separation must be positive");
    }
    grasps.push_back(g);
  }
  return grasps;
}

}  // namespace defgrasp
