#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace platoon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Invalid inputs detected while constructing or validating domain objects
/// (topologies, profiles, configs). Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A runtime precondition was violated mid-simulation (history underrun,
/// inconsistent phase handoff). Maps to CLI exit code 2.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

/// The integrated state stopped being finite.
class DivergenceError : public ContractViolation {
 public:
  DivergenceError(const std::string& what, double t)
      : ContractViolation(what), firstBadTime(t) {}
  double firstBadTime;
};

}  // namespace platoon
