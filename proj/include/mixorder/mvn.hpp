#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mixorder/common.hpp"

namespace mixorder::mvn {

// Cholesky wrapper used everywhere a covariance has to be inverted. Rejects
// factorizations whose smallest pivot is below 1e-12 * trace/d.
class SpdChol {
 public:
  explicit SpdChol(const Mat& sigma);

  int dim() const { return static_cast<int>(l_.rows()); }
  double log_det() const { return log_det_; }
  const Mat& chol_lower() const { return l_; }
  Mat inverse() const;
  Vec solve(const Vec& b) const;
  double quad_form(const Vec& r) const;  // r' Sigma^{-1} r

 private:
  Mat l_;
  double log_det_;
};

void check_symmetric(const Mat& sigma, double rel_tol = 1e-12);

/// Log of the d-variate normal density with mean mu (+ gamma*z when present).
double log_density(const Vec& x, const Vec& mu, const Mat& sigma);
double log_density(const Vec& x, const std::optional<Vec>& z,
                   const std::optional<Mat>& gamma, const Vec& mu,
                   const Mat& sigma);

double density(const Vec& x, const Vec& mu, const Mat& sigma);
double density(const Vec& x, const std::optional<Vec>& z,
               const std::optional<Mat>& gamma, const Vec& mu,
               const Mat& sigma);

// v-parameterization of a symmetric matrix: (v_11, v_12, ..., v_1d, v_22, ...)
// with doubled off-diagonal entries. sigma_of_v is its exact inverse.
Vec w_of_sigma(const Mat& sigma);
Mat sigma_of_v(const Vec& v);

// Partial derivative of the density with respect to mean coordinates.
// idx holds 0-based coordinate indices, one per differentiation (order 1-6,
// order of entries immaterial). Evaluated by the partition-sum formulas:
//   d^k f = f * sum over pairings {(-1)^#pairs prod P_ab prod y_c}
// with P = Sigma^{-1} and y = Sigma^{-1}(x - mu).
double mu_derivative(const Vec& x, const Vec& mu, const Mat& sigma,
                     const std::vector<int>& idx);

// Derivative with respect to v-coordinates (index pairs, 0-based), optionally
// mixed with further mu-derivatives: each d/dv_{ab} equals half of
// d^2/dmu_a dmu_b, so the result is 2^{-#pairs} times a mu_derivative.
double v_derivative(const Vec& x, const Vec& mu, const Mat& sigma,
                    const std::vector<std::pair<int, int>>& pairs,
                    const std::vector<int>& mixed_mu = {});

// Same derivative computed through the covariance route (explicit first- and
// second-order Sigma-derivative formulas). Supports 1 or 2 pairs; serves as
// the independent path when verifying the mu-route identities.
double v_derivative_direct(const Vec& x, const Vec& mu, const Mat& sigma,
                           const std::vector<std::pair<int, int>>& pairs);

}  // namespace mixorder::mvn
