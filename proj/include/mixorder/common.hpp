#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mixorder {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// Observations are stored row-per-observation; row-major keeps each
// observation contiguous for the batch kernels.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bad argument shape/value (dimension mismatch, out-of-range setting).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Mathematically invalid input (non-SPD covariance, tau outside (0,1)).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Numeric failure during a computation (zero density row, failed factorization).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV parse failures, non-finite entries).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline int tri_size(int d) { return d * (d + 1) / 2; }

// d such that d(d+1)/2 == len, or -1 if len is not a triangular number.
inline int tri_dim(int len) {
  int d = static_cast<int>((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0 + 0.5);
  return tri_size(d) == len ? d : -1;
}

}  // namespace mixorder
