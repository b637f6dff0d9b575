#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace opengraph {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Points2 = std::vector<Vec2>;
using Points3 = std::vector<Vec3>;
using Embedding = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data is missing, malformed or violates a documented invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A caller passed arguments outside an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace opengraph
