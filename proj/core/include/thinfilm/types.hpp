#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace thinfilm {

/// Largest supported ambient dimension d+1 and target dimension m.
inline constexpr int kMaxDim = 3;

/// Small vectors/matrices live on the stack: d+1 <= 3 and m <= 3.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using SquareMat = Mat;

/// Nodal field, component c of node n at index n*m + c.
using Field = Eigen::VectorXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: violated preconditions, malformed configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// NaN/inf encountered, solver breakdown, resource caps.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace thinfilm
