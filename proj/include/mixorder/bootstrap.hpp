#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mixorder/emtest.hpp"

namespace mixorder {

enum class StatisticKind { kEmTest, kLrtHetero, kLrtHomo };

struct BootstrapResult {
  double observed = 0.0;
  std::vector<double> replicates;  // successful replicates, index order
  double p_value = 1.0;
  std::map<double, double> critical_values;  // level (e.g. 0.95) -> quantile
  int B = 0;
  std::uint64_t seed = 0;
  int failed = 0;

  // EM test only: observed statistic and p-value for each k = 1..K
  std::vector<double> observed_by_k;
  std::vector<double> p_value_by_k;

  FitResult null_fit;  // null fit of the observed data
};

/// B^{-1} #{b : replicate_b > observed}; strict inequality.
double p_value_from(const std::vector<double>& replicates, double observed);

/// Order-statistic (1-alpha) quantile: the ceil(level*B)-th smallest replicate
/// for level = 1-alpha in (0,1).
double quantile(std::vector<double> replicates, double level);

// Parametric bootstrap: fit the null on `data`, simulate B samples from it
// (conditional on observed z), recompute the statistic on each. Deterministic
// given seed for any `jobs`. Replicates whose fit fails are dropped; more than
// 1% failures aborts the run.
BootstrapResult bootstrap_test(const Dataset& data, int M0, StatisticKind kind,
                               int B, const EMTestConfig& config,
                               std::uint64_t seed, double epsilon1 = 0.05,
                               int jobs = 1);

}  // namespace mixorder
