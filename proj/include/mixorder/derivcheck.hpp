#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixorder/asymptotics.hpp"
#include "mixorder/common.hpp"

namespace mixorder {

// Central finite difference of the normal density in mean coordinates
// (0-based indices, step per differentiation); Richardson-extrapolated
// variant for the higher orders.
double fd_mu_derivative(const Vec& x, const Vec& mu, const Mat& sigma,
                        const std::vector<int>& idx, double h);
double fd_mu_derivative_richardson(const Vec& x, const Vec& mu,
                                   const Mat& sigma, const std::vector<int>& idx,
                                   double h);

// Finite difference in a v-coordinate direction (pairs of 0-based indices).
double fd_v_derivative(const Vec& x, const Vec& mu, const Mat& sigma,
                       const std::vector<std::pair<int, int>>& pairs, double h);

struct DerivCheckReport {
  int cases = 0;
  // analytic mean-derivatives vs finite differences, orders 1..6
  double max_fd_rel = 0.0;
  // mu-route vs covariance-route derivative identities (analytic both sides)
  double max_identity_rel = 0.0;
  // v-route derivatives vs finite differences in the v coordinate
  double max_v_fd_rel = 0.0;
  // reparameterized-density vanishing/nonzero derivative checks
  double max_vanishing_abs = 0.0;
  double max_lemma_rel = 0.0;
  bool pass = false;
  std::vector<std::string> failures;
};

// Randomized verification matrix across d in {1,2,3} and a small alpha grid;
// the backbone of the derivcheck command.
DerivCheckReport run_derivative_checks(int cases, std::uint64_t seed,
                                       double tol_fd = 1e-4,
                                       double tol_identity = 1e-10,
                                       double tol_v_fd = 1e-3,
                                       double tol_vanishing = 1e-6,
                                       double tol_lemma = 1e-3);

}  // namespace mixorder
