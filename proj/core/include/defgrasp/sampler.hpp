#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "defgrasp/contact.hpp"
#include "defgrasp/mesh.hpp"
#include "defgrasp/simulation.hpp"

namespace defgrasp {

/// Closed triangle surface with outward-oriented faces.
struct TriSurface {
  Positions vertices;
  std::vector<Tri> tris;

  /// Boundary of the rest mesh.
  static TriSurface of(const TetMesh& mesh);

  Vec3 face_normal(int tri) const;
  double face_area(int tri) const;
};

struct SurfaceSample {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // outward face normal
  int tri = -1;
};

struct RayHit {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  double distance = 0.0;
  int tri = -1;
};

/// Area-weighted surface point sampler.
class SurfaceSampler {
 public:
  explicit SurfaceSampler(const TriSurface& surface);
  SurfaceSample sample(std::mt19937_64& rng) const;

 private:
  const TriSurface* surface_;
  std::vector<double> cumulative_area_;
};

/// Nearest triangle hit along origin + t dir with t > min_distance
/// (Moller-Trumbore). `dir` need not be normalized; distance is in units of |dir|.
std::optional<RayHit> raycast(const TriSurface& surface, const Vec3& origin, const Vec3& dir,
                              double min_distance = 1e-9);

struct SamplerSettings {
  double max_opening = 0.08;   // m
  double clearance = 0.005;    // m added on each side to the contact distance
  int attempts_per_grasp = 100;
  PadGeometry pad;
};

struct SamplerResult {
  std::vector<GraspCandidate> grasps;
  int attempts = 0;
  bool shortfall = false;  // fewer than requested were found
};

/// Antipodal grasp candidates: sample p1 by area, cast a ray inward along the
/// normal to the exit point p2, and accept when both normals lie within the
/// friction cone of the grasp axis, the width fits the gripper and the open
/// pads do not intersect the object. Deterministic in `seed`.
SamplerResult sample_antipodal(const TriSurface& surface, int n, double mu, std::uint64_t seed,
                               const SamplerSettings& settings = {});

/// True when both outward normals make an angle of at most atan(mu) with the
/// grasp axis p1 -> p2 (n1 opposing it, n2 along it).
bool is_antipodal(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2, double mu);

/// True if any surface vertex lies inside either pad volume of a gripper at
/// `pose` opened to `separation`.
bool pads_intersect(const TriSurface& surface, const RigidTransform& pose, double separation,
                    const PadGeometry& pad);

/// Grasp CSV: header `id,px,py,pz,qx,qy,qz,qw,separation`.
void write_grasp_csv(const std::vector<GraspCandidate>& grasps, const std::filesystem::path& path);
std::vector<GraspCandidate> read_grasp_csv(const std::filesystem::path& path);

}  // namespace defgrasp
