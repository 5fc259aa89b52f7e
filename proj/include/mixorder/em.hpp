#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mixorder/common.hpp"
#include "mixorder/mixture.hpp"

namespace mixorder {

struct EMConfig {
  enum class AnRule { kSqrtInvN, kOne, kCustom };

  int max_iter = 2000;
  double rel_tol = 1e-8;
  int n_starts = 20;
  AnRule a_n_rule = AnRule::kSqrtInvN;
  double a_n_custom = 0.0;
  std::uint64_t seed = 0;

  double a_n(int n) const {
    switch (a_n_rule) {
      case AnRule::kSqrtInvN: return 1.0 / std::sqrt(static_cast<double>(n));
      case AnRule::kOne: return 1.0;
      case AnRule::kCustom: return a_n_custom;
    }
    return 0.0;
  }

  void validate() const {
    if (max_iter < 1) throw ArgumentError("max_iter must be >= 1");
    if (!(rel_tol > 0)) throw ArgumentError("rel_tol must be positive");
    if (n_starts < 1) throw ArgumentError("n_starts must be >= 1");
    if (a_n_rule == AnRule::kCustom && a_n_custom < 0)
      throw ArgumentError("custom a_n must be nonnegative");
  }
};

struct FitResult {
  MixtureParams params;  // canonical order
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  int start_index = -1;
  int degeneracy_floor_count = 0;
  // largest observed drop of the penalized objective along the winning chain
  double monotonicity_violation = 0.0;
};

// Thrown when no EM start reaches the convergence tolerance; carries the best
// chain found so callers can inspect it.
struct NonConvergenceError : NumericError {
  NonConvergenceError(const std::string& msg, FitResult partial)
      : NumericError(msg), best_partial(std::move(partial)) {}
  FitResult best_partial;
};

/// Posterior component weights, one row per observation, rows sum to one.
Mat e_step(const MixtureParams& params, const Dataset& data);

// Closed-form penalized M-step given a weight matrix. prev supplies the
// covariances used by the covariate block (and the homoscedastic flag); when
// absent a heteroscedastic covariate-free update is performed.
MixtureParams m_step_penalized(const Mat& weights, const Dataset& data,
                               const PenaltySpec& penalty,
                               const MixtureParams* prev = nullptr);

/// One-component MLE (closed form; gamma by least squares when z present).
FitResult one_component_mle(const Dataset& data);

// Penalized MLE of an M-component heteroscedastic mixture by multistart EM.
// Anchors default to the one-component MLE covariance.
FitResult fit_pmle(const Dataset& data, int M, const EMConfig& config);
FitResult fit_pmle(const Dataset& data, int M, const EMConfig& config,
                   const std::vector<Mat>& penalty_anchors);

/// Unpenalized MLE with a covariance shared across components.
FitResult fit_mle_homoscedastic(const Dataset& data, int M,
                                const EMConfig& config);

// Exact maximizer of nm*log(tau) + nm1*log(1-tau) [+ log(2 min(tau,1-tau))].
double tau_argmax(double nm, double nm1, bool penalized);

namespace detail {

// Shared EM chain driver; emtest builds its restricted/GEM variants on it.
struct EmOptions {
  PenaltySpec penalty;
  bool homoscedastic = false;
  int pair_index = -1;     // 0-based m-1: components (m, m+1) form the tau pair
  double fixed_tau = -1.0; // keep alpha_m/(alpha_m+alpha_{m+1}) at this value
  bool tau_update = false; // penalized tau argmax each M-step
  // per-component interval constraint on one mean coordinate
  const std::vector<std::pair<double, double>>* mean_boxes = nullptr;
  int box_coord = 0;
  double eps1 = -1.0;      // project alpha onto [eps1, 1-eps1] when positive
};

struct ChainResult {
  MixtureParams params;
  double loglik = 0.0;
  double penalized = 0.0;  // loglik + variance penalty + tau penalty if any
  double tau = -1.0;
  int iterations = 0;
  bool converged = false;
  int floor_count = 0;
  double monotonicity_violation = 0.0;
};

ChainResult run_em_chain(const Dataset& data, const MixtureParams& start,
                         const EmOptions& opts, int max_iter, double rel_tol);

// Single E+M cycle (used by the EM-test GEM steps).
ChainResult em_cycle(const Dataset& data, const MixtureParams& params,
                     const EmOptions& opts);

double chain_objective(const Dataset& data, const MixtureParams& params,
                       const EmOptions& opts, double* loglik_out = nullptr);

std::vector<MixtureParams> default_starts(const Dataset& data, int M,
                                          const EMConfig& config,
                                          bool homoscedastic);

}  // namespace detail

}  // namespace mixorder
