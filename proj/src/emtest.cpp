#include "mixorder/emtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixorder/mvn.hpp"
#include "mixorder/rng.hpp"

namespace mixorder {

std::pair<double, double> PartitionEstimate::box(int j) const {
  const double inf = std::numeric_limits<double>::infinity();
  const int nb = boxes();
  if (j < 0 || j >= nb) throw ArgumentError("box index out of range");
  const double lo = (j == 0) ? -inf : cut_points[j - 1];
  const double hi = (j == nb - 1) ? inf : cut_points[j];
  return {lo, hi};
}

void EMTestConfig::validate() const {
  if (K < 1) throw ArgumentError("K must be >= 1");
  if (a_n < 0) throw ArgumentError("a_n must be nonnegative");
  bool has_half = false;
  for (double t : tau_set) {
    if (!(t > 0.0 && t <= 0.5))
      throw ArgumentError("tau values must lie in (0, 0.5]");
    if (t == 0.5) has_half = true;
  }
  if (!has_half) throw ArgumentError("tau_set must contain 0.5");
  em.validate();
}

PartitionEstimate build_partitions(const FitResult& null_fit) {
  const MixtureParams& p = null_fit.params;
  const int m0 = p.components();
  const int d = p.dim();
  PartitionEstimate part;
  if (m0 == 1) return part;

  auto spread = [&](int c) {
    double lo = p.mu[0][c], hi = p.mu[0][c];
    for (int j = 1; j < m0; ++j) {
      lo = std::min(lo, p.mu[j][c]);
      hi = std::max(hi, p.mu[j][c]);
    }
    return hi - lo;
  };
  auto min_gap_sorted = [&](int c) {
    std::vector<double> v(m0);
    for (int j = 0; j < m0; ++j) v[j] = p.mu[j][c];
    std::sort(v.begin(), v.end());
    double g = std::numeric_limits<double>::infinity();
    for (int j = 1; j < m0; ++j) g = std::min(g, v[j] - v[j - 1]);
    return g;
  };

  int coord = 0;
  const double scale = std::max(spread(0), 1e-8);
  if (min_gap_sorted(0) <= 1e-8 * std::max(scale, 1.0)) {
    // first coordinates effectively tied: cut on the widest-spread coordinate
    double best = -1.0;
    for (int c = 0; c < d; ++c) {
      const double s = spread(c);
      if (s > best) {
        best = s;
        coord = c;
      }
    }
    part.fallback_coord = true;
    if (min_gap_sorted(coord) <= 0.0)
      throw NumericError("null fit means tied on every coordinate; no partition");
  }
  part.coord = coord;

  std::vector<double> v(m0);
  for (int j = 0; j < m0; ++j) v[j] = p.mu[j][coord];
  std::sort(v.begin(), v.end());
  part.cut_points.resize(m0 - 1);
  for (int j = 0; j + 1 < m0; ++j)
    part.cut_points[j] = 0.5 * (v[j] + v[j + 1]);
  return part;
}

namespace {

// null components reordered so that component j sits in box j
MixtureParams order_by_coord(const MixtureParams& p, int coord) {
  const int m0 = p.components();
  std::vector<int> idx(m0);
  for (int j = 0; j < m0; ++j) idx[j] = j;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return p.mu[a][coord] < p.mu[b][coord]; });
  MixtureParams out = p;
  for (int j = 0; j < m0; ++j) {
    out.alpha[j] = p.alpha[idx[j]];
    out.mu[j] = p.mu[idx[j]];
    if (!p.homoscedastic) out.sigma[j] = p.sigma[idx[j]];
  }
  return out;
}

std::vector<std::pair<double, double>> split_boxes(
    const PartitionEstimate& part, int m, int m_total) {
  std::vector<std::pair<double, double>> boxes(m_total);
  for (int j = 1; j <= m_total; ++j) {
    int box;
    if (j < m)
      box = j - 1;
    else if (j == m || j == m + 1)
      box = m - 1;
    else
      box = j - 2;
    boxes[j - 1] = part.box(box);
  }
  return boxes;
}

}  // namespace

std::vector<Mat> split_anchors(const MixtureParams& null_params, int m) {
  const int m0 = null_params.components();
  if (m < 1 || m > m0) throw ArgumentError("split index out of range");
  std::vector<Mat> anchors(m0 + 1);
  for (int j = 1; j <= m0 + 1; ++j) {
    int src;
    if (j < m)
      src = j - 1;
    else if (j == m || j == m + 1)
      src = m - 1;
    else
      src = j - 2;
    anchors[j - 1] = null_params.sigma_of(src);
  }
  return anchors;
}

MixtureParams restricted_initial_fit(const Dataset& data, int m, double tau0,
                                     const PartitionEstimate& partitions,
                                     const EMTestConfig& config,
                                     const FitResult& null_fit) {
  if (!(tau0 > 0.0 && tau0 <= 0.5))
    throw ArgumentError("tau0 must lie in (0, 0.5]");
  const MixtureParams null_params =
      order_by_coord(null_fit.params, partitions.coord);
  const int m0 = null_params.components();
  if (m < 1 || m > m0) throw ArgumentError("split index out of range");
  const int d = null_params.dim();
  const int coord = partitions.coord;

  detail::EmOptions opts;
  opts.penalty.a_n = config.a_n;
  opts.penalty.anchors = split_anchors(null_params, m);
  opts.pair_index = m - 1;
  opts.fixed_tau = tau0;
  opts.tau_update = false;
  auto boxes = split_boxes(partitions, m, m0 + 1);
  opts.mean_boxes = &boxes;
  opts.box_coord = coord;

  // duplication embedding of null component m
  MixtureParams dup;
  dup.alpha = Vec(m0 + 1);
  dup.mu.resize(m0 + 1);
  dup.sigma.resize(m0 + 1);
  dup.gamma = null_params.gamma;
  for (int j = 1; j <= m0 + 1; ++j) {
    int src;
    if (j < m)
      src = j - 1;
    else if (j == m || j == m + 1)
      src = m - 1;
    else
      src = j - 2;
    dup.mu[j - 1] = null_params.mu[src];
    dup.sigma[j - 1] = null_params.sigma_of(src);
    dup.alpha[j - 1] = (j == m)       ? tau0 * null_params.alpha[src]
                       : (j == m + 1) ? (1.0 - tau0) * null_params.alpha[src]
                                      : null_params.alpha[src];
  }

  const double sd_box = std::sqrt(null_params.sigma_of(m - 1)(coord, coord));
  const auto [box_lo, box_hi] = partitions.box(m - 1);
  const double center = null_params.mu[m - 1][coord];
  const double lo = std::max(box_lo, center - 3.0 * sd_box);
  const double hi = std::min(box_hi, center + 3.0 * sd_box);

  MixtureParams best;
  double best_obj = -std::numeric_limits<double>::infinity();
  bool have = false;
  const int n_starts = std::max(config.em.n_starts, 1);
  for (int s = 0; s < n_starts; ++s) {
    MixtureParams start = dup;
    if (s > 0) {
      // split the pair inside its box, jitter the remaining coordinates
      Rng rng = make_stream(config.em.seed,
                            (static_cast<std::uint64_t>(m) << 24) ^
                                (static_cast<std::uint64_t>(s) << 8) ^
                                static_cast<std::uint64_t>(tau0 * 1e6));
      start.mu[m - 1][coord] = rng.uniform(lo, hi);
      start.mu[m][coord] = rng.uniform(lo, hi);
      for (int a = 0; a < d; ++a) {
        if (a == coord) continue;
        const double sd_a = std::sqrt(null_params.sigma_of(m - 1)(a, a));
        start.mu[m - 1][a] += 0.5 * sd_a * rng.normal();
        start.mu[m][a] += 0.5 * sd_a * rng.normal();
      }
      const double scale1 = rng.uniform(0.6, 1.4);
      const double scale2 = rng.uniform(0.6, 1.4);
      start.sigma[m - 1] *= scale1;
      start.sigma[m] *= scale2;
    }
    detail::ChainResult chain;
    try {
      chain = detail::run_em_chain(data, start, opts, config.em.max_iter,
                                   config.em.rel_tol);
    } catch (const NumericError&) {
      continue;
    }
    if (!have || chain.penalized > best_obj) {
      best = chain.params;
      best_obj = chain.penalized;
      have = true;
    }
  }
  if (!have)
    throw NumericError("restricted fit failed for split " + std::to_string(m));
  return best;
}

std::vector<GemStep> gem_k_steps(const MixtureParams& start, double tau0,
                                 const Dataset& data,
                                 const std::vector<Mat>& anchors, double a_n,
                                 int K, double null_loglik, int pair_index) {
  detail::EmOptions opts;
  opts.penalty.a_n = a_n;
  opts.penalty.anchors = anchors;
  opts.pair_index = pair_index;
  opts.fixed_tau = tau0;
  opts.tau_update = false;

  std::vector<GemStep> steps;
  steps.reserve(K);
  GemStep first;
  first.params = start;
  first.tau = tau0;
  first.penalized = detail::chain_objective(data, start, opts);
  first.m_nk = 2.0 * (first.penalized - null_loglik);
  steps.push_back(std::move(first));

  opts.tau_update = true;  // k >= 2: free tau, no box restriction
  for (int k = 2; k <= K; ++k) {
    detail::ChainResult cycle =
        detail::em_cycle(data, steps.back().params, opts);
    GemStep step;
    step.params = cycle.params;
    step.tau = cycle.tau;
    step.penalized = cycle.penalized;
    step.m_nk = 2.0 * (cycle.penalized - null_loglik);
    steps.push_back(std::move(step));
  }
  return steps;
}

EMTestResult em_test_statistic(const Dataset& data, int M0,
                               const EMTestConfig& config) {
  config.validate();
  data.validate();
  if (data.n() <= (M0 + 1) * (data.dim() + 1))
    throw ArgumentError("sample too small for the alternative order");

  EMTestResult result;
  result.null_fit = fit_pmle(data, M0, config.em);
  result.partitions = build_partitions(result.null_fit);
  const double null_loglik = result.null_fit.loglik;
  const MixtureParams null_sorted =
      order_by_coord(result.null_fit.params, result.partitions.coord);

  result.statistic_by_k.assign(config.K, -std::numeric_limits<double>::infinity());
  result.em_m_k.assign(M0, -std::numeric_limits<double>::infinity());
  double best_final = -std::numeric_limits<double>::infinity();

  for (int m = 1; m <= M0; ++m) {
    const std::vector<Mat> anchors = split_anchors(null_sorted, m);
    for (double tau0 : config.tau_set) {
      MixtureParams start;
      try {
        start = restricted_initial_fit(data, m, tau0, result.partitions,
                                       config, result.null_fit);
      } catch (const NumericError& e) {
        throw NumericError("branch (m=" + std::to_string(m) +
                           ", tau0=" + std::to_string(tau0) + "): " + e.what());
      }
      BranchResult branch;
      branch.m = m;
      branch.tau0 = tau0;
      branch.steps = gem_k_steps(start, tau0, data, anchors, config.a_n,
                                 config.K, null_loglik, m - 1);
      for (int k = 0; k < config.K; ++k) {
        const double v = branch.steps[k].m_nk;
        result.statistic_by_k[k] = std::max(result.statistic_by_k[k], v);
        if (k + 1 < config.K)
          result.monotonicity_violation =
              std::max(result.monotonicity_violation,
                       v - branch.steps[k + 1].m_nk);
      }
      const double final_v = branch.steps.back().m_nk;
      result.em_m_k[m - 1] = std::max(result.em_m_k[m - 1], final_v);
      if (final_v > best_final) {
        best_final = final_v;
        result.alt_params = branch.steps.back().params;
      }
      result.per_split.push_back(std::move(branch));
    }
  }
  result.statistic = result.statistic_by_k.back();
  return result;
}

LrtResult lrt_statistic_hetero(const Dataset& data, int M0, double epsilon1,
                               const EMTestConfig& config) {
  if (!(epsilon1 > 0.0 && epsilon1 < 1.0 / (M0 + 1)))
    throw ArgumentError("epsilon1 must lie in (0, 1/(M0+1))");
  LrtResult out;
  out.null_fit = fit_pmle(data, M0, config.em);

  const Mat omega = one_component_mle(data).params.sigma[0];
  detail::EmOptions opts;
  opts.penalty.a_n = config.a_n;
  opts.penalty.anchors = {omega};
  opts.eps1 = epsilon1;

  EMConfig alt_cfg = config.em;
  auto starts = detail::default_starts(data, M0 + 1, alt_cfg, false);
  bool have = false;
  for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
    // feasible weights under the eps1 box
    starts[s].alpha =
        (starts[s].alpha.array() + epsilon1).matrix() /
        (1.0 + (M0 + 1) * epsilon1);
    detail::ChainResult chain;
    try {
      chain = detail::run_em_chain(data, starts[s], opts, alt_cfg.max_iter,
                                   alt_cfg.rel_tol);
    } catch (const NumericError&) {
      continue;
    }
    if (!have || chain.penalized > out.alt_fit.penalized_loglik) {
      out.alt_fit.params = canonicalize(chain.params);
      out.alt_fit.loglik = chain.loglik;
      out.alt_fit.penalized_loglik = chain.penalized;
      out.alt_fit.iterations = chain.iterations;
      out.alt_fit.converged = chain.converged;
      out.alt_fit.start_index = s;
      out.alt_fit.monotonicity_violation = chain.monotonicity_violation;
      have = true;
    }
  }
  if (!have) throw NumericError("alternative fit failed in every start");
  out.statistic = 2.0 * (out.alt_fit.loglik - out.null_fit.loglik);
  return out;
}

LrtResult lrt_statistic_homo(const Dataset& data, int M0,
                             const EMConfig& config) {
  LrtResult out;
  out.null_fit = fit_mle_homoscedastic(data, M0, config);
  out.alt_fit = fit_mle_homoscedastic(data, M0 + 1, config);
  out.statistic = 2.0 * (out.alt_fit.loglik - out.null_fit.loglik);
  return out;
}

}  // namespace mixorder
