#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mixorder/common.hpp"
#include "mixorder/rng.hpp"

namespace mixorder {

// Full parameter vector of an M-component normal mixture. sigma holds M
// matrices, or a single shared matrix when homoscedastic is set. gamma (d x p)
// shifts every component mean by gamma*z.
struct MixtureParams {
  Vec alpha;
  std::vector<Vec> mu;
  std::vector<Mat> sigma;
  std::optional<Mat> gamma;
  bool homoscedastic = false;

  int components() const { return static_cast<int>(mu.size()); }
  int dim() const { return mu.empty() ? 0 : static_cast<int>(mu[0].size()); }
  int covariate_dim() const { return gamma ? static_cast<int>(gamma->cols()) : 0; }
  const Mat& sigma_of(int j) const { return homoscedastic ? sigma[0] : sigma[j]; }

  void validate() const;  // throws ArgumentError / DomainError
};

struct Dataset {
  RowMat x;
  std::optional<RowMat> z;

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  int covariate_dim() const { return z ? static_cast<int>(z->cols()) : 0; }
  void validate() const;
};

// a_n and the anchor covariances Omega_j of the variance penalty. A single
// anchor is broadcast to every component.
struct PenaltySpec {
  double a_n = 0.0;
  std::vector<Mat> anchors;

  const Mat& anchor(int j) const {
    return anchors.size() == 1 ? anchors[0] : anchors[static_cast<size_t>(j)];
  }
};

double mixture_log_density(const MixtureParams& params, const Vec& x,
                           const std::optional<Vec>& z = std::nullopt);
double mixture_density(const MixtureParams& params, const Vec& x,
                       const std::optional<Vec>& z = std::nullopt);

double log_likelihood(const MixtureParams& params, const Dataset& data);

// -a_n { tr(Omega Sigma^{-1}) - log det(Omega Sigma^{-1}) - d }; zero iff
// Sigma == Omega, strictly negative otherwise.
double variance_penalty(const Mat& sigma, const Mat& omega, double a_n);

double penalty_total(const MixtureParams& params, const PenaltySpec& penalty);

/// log(2 min(tau, 1-tau)) for tau in (0,1).
double tau_penalty(double tau);

// Components sorted ascending by mean (lexicographic), ties by vectorized
// covariance; the likelihood is unchanged. Idempotent.
MixtureParams canonicalize(const MixtureParams& params);

Dataset sample(const MixtureParams& params, int n, Rng& rng,
               const std::optional<RowMat>& z_rows = std::nullopt);

struct InformationCriteria {
  double aic;
  double bic;
  int k;
};

InformationCriteria information_criteria(const MixtureParams& params,
                                         const Dataset& data);
InformationCriteria information_criteria_from_loglik(const MixtureParams& params,
                                                     double loglik, int n);

// CSV with one header row; the first x_cols columns are x, the rest are z.
Dataset read_dataset_csv(const std::string& path, int x_cols);
void write_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace mixorder
