#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace defgrasp {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Positions = Eigen::Matrix3Xd;  // one column per node

/// Rigid transform: world = orientation * local + position.
struct RigidTransform {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Mat3 rotation() const { return orientation.toRotationMatrix(); }
  Vec3 apply(const Vec3& local) const { return orientation * local + position; }
  Vec3 inverse_apply(const Vec3& world) const {
    return orientation.conjugate() * (world - position);
  }
};

// Error hierarchy. The CLI maps each family onto a distinct exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

class ElementInversionError : public SimulationError {
 public:
  ElementInversionError(int element, double det)
      : SimulationError("element " + std::to_string(element) +
                        " inverted (det F = " + std::to_string(det) + ")"),
        element_(element) {}
  int element() const { return element_; }

 private:
  int element_;
};

class NewtonDivergenceError : public SimulationError {
 public:
  NewtonDivergenceError(double residual, double tolerance)
      : SimulationError("Newton did not converge: residual " + std::to_string(residual) +
                        " N > tolerance " + std::to_string(tolerance) + " N"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace defgrasp
