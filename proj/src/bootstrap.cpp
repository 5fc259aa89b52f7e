#include "mixorder/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "mixorder/parallel.hpp"
#include "mixorder/rng.hpp"

namespace mixorder {

double p_value_from(const std::vector<double>& replicates, double observed) {
  if (replicates.empty()) throw ArgumentError("no replicates");
  int count = 0;
  for (double r : replicates)
    if (r > observed) ++count;
  return static_cast<double>(count) / static_cast<double>(replicates.size());
}

double quantile(std::vector<double> replicates, double level) {
  if (replicates.empty()) throw ArgumentError("no replicates");
  if (!(level > 0.0 && level < 1.0))
    throw ArgumentError("quantile level must lie in (0,1)");
  const int b = static_cast<int>(replicates.size());
  int rank = static_cast<int>(std::ceil(level * b));  // 1-based order statistic
  rank = std::clamp(rank, 1, b);
  std::nth_element(replicates.begin(), replicates.begin() + (rank - 1),
                   replicates.end());
  return replicates[rank - 1];
}

namespace {

struct StatOutput {
  double value = 0.0;
  std::vector<double> by_k;  // EM test trajectory maxima, empty otherwise
};

StatOutput compute_statistic(const Dataset& data, int M0, StatisticKind kind,
                             const EMTestConfig& config, double epsilon1,
                             const FitResult** null_fit_out,
                             FitResult* null_fit_store) {
  StatOutput out;
  switch (kind) {
    case StatisticKind::kEmTest: {
      EMTestResult r = em_test_statistic(data, M0, config);
      out.value = r.statistic;
      out.by_k = r.statistic_by_k;
      if (null_fit_store) *null_fit_store = r.null_fit;
      break;
    }
    case StatisticKind::kLrtHetero: {
      LrtResult r = lrt_statistic_hetero(data, M0, epsilon1, config);
      out.value = r.statistic;
      if (null_fit_store) *null_fit_store = r.null_fit;
      break;
    }
    case StatisticKind::kLrtHomo: {
      LrtResult r = lrt_statistic_homo(data, M0, config.em);
      out.value = r.statistic;
      if (null_fit_store) *null_fit_store = r.null_fit;
      break;
    }
  }
  if (null_fit_out && null_fit_store) *null_fit_out = null_fit_store;
  return out;
}

}  // namespace

BootstrapResult bootstrap_test(const Dataset& data, int M0, StatisticKind kind,
                               int B, const EMTestConfig& config,
                               std::uint64_t seed, double epsilon1, int jobs) {
  if (B < 1) throw ArgumentError("B must be >= 1");
  config.validate();
  data.validate();

  BootstrapResult result;
  result.B = B;
  result.seed = seed;

  FitResult null_fit;
  StatOutput observed =
      compute_statistic(data, M0, kind, config, epsilon1, nullptr, &null_fit);
  result.observed = observed.value;
  result.observed_by_k = observed.by_k;
  result.null_fit = null_fit;

  const int n = data.n();
  struct Slot {
    StatOutput stat;
    bool ok = false;
  };
  std::vector<Slot> slots(B);
  parallel_for(B, jobs, [&](std::size_t b) {
    Rng rng = make_stream(seed, b + 1);
    try {
      Dataset replicate = sample(null_fit.params, n, rng, data.z);
      slots[b].stat =
          compute_statistic(replicate, M0, kind, config, epsilon1, nullptr, nullptr);
      slots[b].ok = true;
    } catch (const NumericError&) {
      slots[b].ok = false;
    }
  });

  const int k_count = static_cast<int>(observed.by_k.size());
  std::vector<std::vector<double>> reps_by_k(k_count);
  for (const Slot& s : slots) {
    if (!s.ok) {
      ++result.failed;
      continue;
    }
    result.replicates.push_back(s.stat.value);
    for (int k = 0; k < k_count; ++k) reps_by_k[k].push_back(s.stat.by_k[k]);
  }
  if (result.failed * 100 > B)
    throw NumericError("bootstrap: " + std::to_string(result.failed) + " of " +
                       std::to_string(B) + " replicates failed (>1%)");

  result.p_value = p_value_from(result.replicates, result.observed);
  for (double level : {0.90, 0.95, 0.99})
    result.critical_values[level] = quantile(result.replicates, level);
  for (int k = 0; k < k_count; ++k)
    result.p_value_by_k.push_back(
        p_value_from(reps_by_k[k], observed.by_k[k]));
  return result;
}

}  // namespace mixorder
