#include "defgrasp/metrics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace defgrasp {

double max_von_mises_over_elements(const SimState& state) {
  double m = 0.0;
  for (const Mat3& s : state.elem_stress) m = std::max(m, von_mises(s));
  return m;
}

DeformationField deformation_field(const Positions& pre, const Positions& post) {
  if (pre.cols() != post.cols() || pre.cols() == 0) {
    throw Error("deformation field needs matching, non-empty node sets");
  }
  const Vec3 c_pre = pre.rowwise().mean();
  const Vec3 c_post = post.rowwise().mean();
  const Positions a = pre.colwise() - c_pre;
  const Positions b = post.colwise() - c_post;

  DeformationField out;
  // Collinear (or coincident) reference points leave the rotation undetermined.
  Eigen::JacobiSVD<Mat3> shape(a * a.transpose());
  const Eigen::Vector3d sv = shape.singularValues();
  if (sv[1] <= 1e-14 * std::max(sv[0], 1e-300)) {
    out.degenerate = true;
  } else {
    const Mat3 h = a * b.transpose();
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    out.rotation = v * d * u.transpose();
  }
  out.translation = c_post - out.rotation * c_pre;
  out.displacement = post - ((out.rotation * pre).colwise() + out.translation);
  return out;
}

double max_deformation(const Positions& field) {
  if (field.cols() == 0) return 0.0;
  return field.colwise().norm().maxCoeff();
}

double instability(std::span<const double> loss_accelerations, double limit) {
  if (loss_accelerations.empty()) return limit;
  double sum = 0.0;
  for (double a : loss_accelerations) {
    sum += (std::isfinite(a) && a < limit) ? std::max(a, 0.0) : limit;
  }
  return sum / static_cast<double>(loss_accelerations.size());
}

int censored_count(std::span<const double> loss_accelerations, double limit) {
  int n = 0;
  for (double a : loss_accelerations) n += !(std::isfinite(a) && a < limit);
  return n;
}

std::optional<double> deformation_controllability(std::span<const StateDeformation> states) {
  std::optional<double> best;
  for (const StateDeformation& s : states) {
    if (s.failed) continue;
    best = std::max(best.value_or(0.0), s.max_deformation);
  }
  return best;
}

}  // namespace defgrasp
