#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mixorder/bootstrap.hpp"
#include "mixorder/rng.hpp"

using namespace mixorder;

TEST_CASE("p-value counting uses a strict inequality") {
  std::vector<double> reps = {1.0, 2.0, 3.0, 4.0};
  CHECK(p_value_from(reps, 5.0) == 0.0);
  CHECK(p_value_from(reps, 2.5) == doctest::Approx(0.5));
  CHECK(p_value_from(reps, 2.0) == doctest::Approx(0.5));  // ties excluded
  CHECK(p_value_from(reps, 0.0) == 1.0);
  // weakly decreasing in the observed value
  double prev = 1.1;
  for (double obs = 0.0; obs < 5.0; obs += 0.25) {
    const double p = p_value_from(reps, obs);
    CHECK(p <= prev);
    prev = p;
  }
}

TEST_CASE("quantile is the ceil(level*B) order statistic") {
  std::vector<double> reps(199);
  for (int i = 0; i < 199; ++i) reps[i] = i + 1.0;  // 1..199
  std::reverse(reps.begin(), reps.end());
  CHECK(quantile(reps, 0.95) == 190.0);
  CHECK(quantile(reps, 0.90) == 180.0);

  std::vector<double> constant(50, 3.14);
  CHECK(quantile(constant, 0.5) == 3.14);
  CHECK(quantile(constant, 0.99) == 3.14);

  Rng rng = make_rng(2);
  std::vector<double> unif(100000);
  for (auto& v : unif) v = rng.uniform();
  CHECK(std::abs(quantile(unif, 0.95) - 0.95) <= 0.01);

  CHECK_THROWS_AS(quantile({}, 0.5), ArgumentError);
  CHECK_THROWS_AS(quantile({1.0}, 1.5), ArgumentError);
}

TEST_CASE("quantiles are exchangeable in the replicate order") {
  Rng rng = make_rng(4);
  std::vector<double> reps(99);
  for (auto& v : reps) v = rng.normal();
  std::vector<double> shuffled = reps;
  for (size_t i = shuffled.size() - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[rng.uniform_index(i + 1)]);
  CHECK(quantile(reps, 0.9) == quantile(shuffled, 0.9));
  CHECK(p_value_from(reps, 0.3) == p_value_from(shuffled, 0.3));
}

namespace {

Dataset null_dataset(int n, std::uint64_t seed) {
  MixtureParams p;
  p.alpha = Vec::Ones(1);
  p.mu = {Vec::Zero(2)};
  p.sigma = {Mat::Identity(2, 2)};
  Rng rng = make_rng(seed);
  return sample(p, n, rng);
}

}  // namespace

TEST_CASE("bootstrap results are bit-identical across thread counts") {
  Dataset data = null_dataset(60, 77);
  EMTestConfig cfg;
  cfg.em.seed = 5;
  cfg.em.n_starts = 3;
  BootstrapResult r1 =
      bootstrap_test(data, 1, StatisticKind::kEmTest, 16, cfg, 99, 0.05, 1);
  BootstrapResult r2 =
      bootstrap_test(data, 1, StatisticKind::kEmTest, 16, cfg, 99, 0.05, 2);
  BootstrapResult r3 =
      bootstrap_test(data, 1, StatisticKind::kEmTest, 16, cfg, 99, 0.05, 3);
  REQUIRE(r1.replicates.size() == r2.replicates.size());
  REQUIRE(r1.replicates.size() == r3.replicates.size());
  for (size_t b = 0; b < r1.replicates.size(); ++b) {
    CHECK(r1.replicates[b] == r2.replicates[b]);
    CHECK(r1.replicates[b] == r3.replicates[b]);
  }
  CHECK(r1.observed == r2.observed);
  CHECK(r1.p_value == r2.p_value);
  CHECK(r1.p_value == r3.p_value);
}

TEST_CASE("bootstrap p-value and critical values are internally consistent") {
  Dataset data = null_dataset(80, 31);
  EMTestConfig cfg;
  cfg.em.seed = 11;
  cfg.em.n_starts = 3;
  BootstrapResult r =
      bootstrap_test(data, 1, StatisticKind::kEmTest, 39, cfg, 7, 0.05, 2);
  CHECK(r.p_value == doctest::Approx(p_value_from(r.replicates, r.observed)));
  CHECK(r.critical_values.at(0.90) <= r.critical_values.at(0.95));
  CHECK(r.critical_values.at(0.95) <= r.critical_values.at(0.99));
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);
  REQUIRE(r.p_value_by_k.size() == 3);
  CHECK(r.observed_by_k.size() == 3);
  // rejection via the p-value agrees with the critical-value rule
  const bool reject_p = r.p_value <= 0.05;
  const bool reject_c = r.observed > r.critical_values.at(0.95);
  CHECK(reject_p == reject_c);
}

TEST_CASE("homoscedastic LRT bootstrap runs end to end") {
  Dataset data = null_dataset(70, 13);
  EMTestConfig cfg;
  cfg.em.seed = 3;
  cfg.em.n_starts = 3;
  BootstrapResult r =
      bootstrap_test(data, 1, StatisticKind::kLrtHomo, 9, cfg, 21, 0.05, 2);
  CHECK(r.replicates.size() == 9);
  CHECK(r.p_value_by_k.empty());
  CHECK(std::isfinite(r.observed));
}
