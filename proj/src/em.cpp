#include "mixorder/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mixorder/kernels.hpp"
#include "mixorder/mvn.hpp"
#include "mixorder/rng.hpp"

namespace mixorder {

namespace {

constexpr double kAlphaFloor = 1e-12;
constexpr double kEmptyComponent = 1e-10;

RowMat adjusted_x(const Dataset& data, const MixtureParams& params) {
  if (!params.gamma) return data.x;
  return data.x - (*data.z) * params.gamma->transpose();
}

// Batch E-step on mean-adjusted data. Fills column-major weights (component
// blocks of n contiguous entries) and returns the log-likelihood.
double estep_batch(const MixtureParams& params, const RowMat& xa,
                   std::vector<double>& weights) {
  const auto& ops = kernels::active_ops();
  const int n = static_cast<int>(xa.rows());
  const int d = static_cast<int>(xa.cols());
  const int m = params.components();
  std::vector<double> logw(static_cast<size_t>(n) * m);
  for (int j = 0; j < m; ++j) {
    mvn::SpdChol chol(params.sigma_of(j));
    RowMat prec = chol.inverse();
    const double lognorm = -0.5 * (d * kLog2Pi + chol.log_det()) +
                           std::log(std::max(params.alpha[j], kAlphaFloor));
    ops.logdensity(xa.data(), n, d, params.mu[j].data(), prec.data(), lognorm,
                   logw.data() + j, m);
  }
  std::vector<double> row_max(n);
  for (int i = 0; i < n; ++i) {
    double* row = logw.data() + static_cast<size_t>(i) * m;
    double mx = row[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    if (!std::isfinite(mx))
      throw NumericError("zero mixture density at observation " +
                         std::to_string(i));
    row_max[i] = mx;
    for (int j = 0; j < m; ++j) row[j] -= mx;
  }
  ops.exp_inplace(logw.data(), logw.size());
  weights.resize(static_cast<size_t>(n) * m);
  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = logw.data() + static_cast<size_t>(i) * m;
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += row[j];
    ll += row_max[i] + std::log(s);
    const double inv = 1.0 / s;
    for (int j = 0; j < m; ++j)
      weights[static_cast<size_t>(j) * n + i] = row[j] * inv;
  }
  return ll;
}

// Exact maximizer of sum_j n_j log a_j over the simplex intersected with
// [lo, hi]^M: a_j = clip(n_j / nu) with nu found by bisection.
Vec project_alpha_box(const Vec& nj, double lo, double hi) {
  const int m = static_cast<int>(nj.size());
  if (m * lo >= 1.0 || m * hi <= 1.0)
    throw ArgumentError("weight box incompatible with the simplex");
  const double total = nj.sum();
  auto mass = [&](double nu) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += std::clamp(nj[j] / nu, lo, hi);
    return s;
  };
  double nu_lo = total * 1e-12 + 1e-300;
  double nu_hi = total * 1e12 + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double nu = 0.5 * (nu_lo + nu_hi);
    if (mass(nu) > 1.0)
      nu_lo = nu;
    else
      nu_hi = nu;
  }
  const double nu = 0.5 * (nu_lo + nu_hi);
  Vec alpha(m);
  for (int j = 0; j < m; ++j) alpha[j] = std::clamp(nj[j] / nu, lo, hi);
  alpha /= alpha.sum();
  return alpha;
}

void floor_covariance(Mat& sigma, double scale_hint, int* floor_count) {
  const int d = static_cast<int>(sigma.rows());
  const double floor = 1e-10 * scale_hint / d;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::LLT<Mat> llt(sigma);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      Mat l = llt.matrixL();
      for (int i = 0; i < d; ++i)
        if (!(l(i, i) * l(i, i) > floor)) ok = false;
    }
    if (ok) return;
    sigma += (floor + 1e-12 * scale_hint) * Mat::Identity(d, d);
    if (floor_count) ++(*floor_count);
  }
}

struct MStepScratch {
  std::vector<double> swx, scatter;
};

// M-step from column-major weights. prev supplies previous parameters (means
// kept for empty components, covariances for the covariate block).
MixtureParams m_step_impl(const std::vector<double>& weights, const Dataset& data,
                          const detail::EmOptions& opts,
                          const MixtureParams& prev, int* floor_count,
                          MStepScratch& scratch) {
  const auto& ops = kernels::active_ops();
  const int n = data.n();
  const int d = data.dim();
  const int m = prev.components();

  MixtureParams out = prev;
  Vec nj(m);
  for (int j = 0; j < m; ++j) {
    const double* wj = weights.data() + static_cast<size_t>(j) * n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += wj[i];
    nj[j] = s;
  }

  // mixing weights
  if (opts.pair_index >= 0) {
    const int q = opts.pair_index;
    const double beta = (nj[q] + nj[q + 1]) / n;
    const double tau = opts.tau_update
                           ? tau_argmax(nj[q], nj[q + 1], /*penalized=*/true)
                           : opts.fixed_tau;
    for (int j = 0; j < m; ++j) out.alpha[j] = nj[j] / n;
    out.alpha[q] = tau * beta;
    out.alpha[q + 1] = (1.0 - tau) * beta;
  } else if (opts.eps1 > 0.0) {
    out.alpha = project_alpha_box(nj, opts.eps1, 1.0 - opts.eps1);
  } else {
    for (int j = 0; j < m; ++j) out.alpha[j] = nj[j] / n;
  }

  const double a_n = opts.penalty.a_n;
  for (int j = 0; j < m; ++j)
    if (nj[j] < kEmptyComponent && a_n == 0.0 && !prev.homoscedastic)
      throw NumericError("degenerate component " + std::to_string(j) +
                         " in M-step with a_n = 0");

  RowMat xa = adjusted_x(data, prev);

  scratch.swx.resize(d);
  scratch.scatter.resize(static_cast<size_t>(d) * d);

  // covariate block: block-coordinate sweeps on (gamma, mu) with previous
  // covariances, closed form each block
  if (prev.gamma) {
    const int p = prev.covariate_dim();
    std::vector<Mat> prec(m);
    for (int j = 0; j < m; ++j)
      prec[j] = mvn::SpdChol(prev.sigma_of(j)).inverse();
    Mat gamma = *prev.gamma;
    std::vector<Vec> mu = prev.mu;
    const RowMat& z = *data.z;
    Mat zz_j(p, p);
    for (int sweep = 0; sweep < 5; ++sweep) {
      // gamma given mu
      Mat lhs = Mat::Zero(d * p, d * p);
      Vec rhs = Vec::Zero(d * p);
      for (int j = 0; j < m; ++j) {
        const double* wj = weights.data() + static_cast<size_t>(j) * n;
        zz_j.setZero();
        Mat bj = Mat::Zero(d, p);
        for (int i = 0; i < n; ++i) {
          const double wi = wj[i];
          if (wi == 0.0) continue;
          zz_j.noalias() += wi * z.row(i).transpose() * z.row(i);
          bj.noalias() +=
              wi * (data.x.row(i).transpose() - mu[j]) * z.row(i);
        }
        Mat pb = prec[j] * bj;
        for (int c1 = 0; c1 < p; ++c1)
          for (int c2 = 0; c2 < p; ++c2)
            lhs.block(c1 * d, c2 * d, d, d) += zz_j(c2, c1) * prec[j];
        for (int c1 = 0; c1 < p; ++c1) rhs.segment(c1 * d, d) += pb.col(c1);
      }
      Vec g = lhs.ldlt().solve(rhs);
      for (int c1 = 0; c1 < p; ++c1) gamma.col(c1) = g.segment(c1 * d, d);
      // mu given gamma
      RowMat x_res = data.x - z * gamma.transpose();
      for (int j = 0; j < m; ++j) {
        if (nj[j] < kEmptyComponent) continue;
        const double* wj = weights.data() + static_cast<size_t>(j) * n;
        double sw;
        Vec zero = Vec::Zero(d);
        ops.weighted_moments(x_res.data(), n, d, wj, zero.data(), &sw,
                             scratch.swx.data(), scratch.scatter.data());
        for (int a = 0; a < d; ++a) mu[j][a] = scratch.swx[a] / nj[j];
      }
    }
    out.gamma = gamma;
    out.mu = mu;
    xa = data.x - z * gamma.transpose();
  } else {
    for (int j = 0; j < m; ++j) {
      if (nj[j] < kEmptyComponent) continue;  // keep previous mean
      const double* wj = weights.data() + static_cast<size_t>(j) * n;
      double sw;
      Vec zero = Vec::Zero(d);
      ops.weighted_moments(xa.data(), n, d, wj, zero.data(), &sw,
                           scratch.swx.data(), scratch.scatter.data());
      for (int a = 0; a < d; ++a) out.mu[j][a] = scratch.swx[a] / nj[j];
    }
  }

  if (opts.mean_boxes) {
    for (int j = 0; j < m; ++j) {
      const auto& [lo, hi] = (*opts.mean_boxes)[j];
      out.mu[j][opts.box_coord] = std::clamp(out.mu[j][opts.box_coord], lo, hi);
    }
  }

  // covariances
  if (prev.homoscedastic) {
    Mat pooled = Mat::Zero(d, d);
    double sw;
    for (int j = 0; j < m; ++j) {
      const double* wj = weights.data() + static_cast<size_t>(j) * n;
      ops.weighted_moments(xa.data(), n, d, wj, out.mu[j].data(), &sw,
                           scratch.swx.data(), scratch.scatter.data());
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          pooled(a, b) += scratch.scatter[static_cast<size_t>(a) * d + b];
    }
    pooled /= static_cast<double>(n);
    floor_covariance(pooled, std::max(pooled.trace(), 1e-12), floor_count);
    out.sigma[0] = pooled;
  } else {
    for (int j = 0; j < m; ++j) {
      const double* wj = weights.data() + static_cast<size_t>(j) * n;
      double sw;
      ops.weighted_moments(xa.data(), n, d, wj, out.mu[j].data(), &sw,
                           scratch.swx.data(), scratch.scatter.data());
      Mat s(d, d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          s(a, b) = scratch.scatter[static_cast<size_t>(a) * d + b];
      if (a_n > 0.0) {
        const Mat& omega = opts.penalty.anchor(j);
        out.sigma[j] = (2.0 * a_n * omega + s) / (2.0 * a_n + nj[j]);
        floor_covariance(out.sigma[j], omega.trace(), floor_count);
      } else {
        out.sigma[j] = s / nj[j];
        floor_covariance(out.sigma[j], std::max(out.sigma[j].trace(), 1e-12),
                         floor_count);
      }
    }
  }
  return out;
}

double tau_of(const MixtureParams& params, const detail::EmOptions& opts) {
  if (opts.pair_index < 0) return -1.0;
  const int q = opts.pair_index;
  const double beta = params.alpha[q] + params.alpha[q + 1];
  if (beta <= 0.0) return opts.fixed_tau > 0 ? opts.fixed_tau : 0.5;
  return params.alpha[q] / beta;
}

}  // namespace

double tau_argmax(double nm, double nm1, bool penalized) {
  const double total = nm + nm1;
  if (!penalized) return total > 0.0 ? nm / total : 0.5;
  const double t_left = (nm + 1.0) / (total + 1.0);
  const double t_right = nm / (total + 1.0);
  if (t_left <= 0.5) return t_left;
  if (t_right >= 0.5) return t_right;
  return 0.5;
}

Mat e_step(const MixtureParams& params, const Dataset& data) {
  params.validate();
  data.validate();
  if (data.dim() != params.dim())
    throw ArgumentError("data dimension does not match mixture");
  std::vector<double> weights;
  RowMat xa = adjusted_x(data, params);
  estep_batch(params, xa, weights);
  const int n = data.n();
  const int m = params.components();
  Mat w(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) w(i, j) = weights[static_cast<size_t>(j) * n + i];
  return w;
}

MixtureParams m_step_penalized(const Mat& weights, const Dataset& data,
                               const PenaltySpec& penalty,
                               const MixtureParams* prev) {
  const int n = data.n();
  const int m = static_cast<int>(weights.cols());
  if (weights.rows() != n) throw ArgumentError("weight matrix row mismatch");
  MixtureParams base;
  if (prev) {
    base = *prev;
  } else {
    if (data.z)
      throw ArgumentError("previous parameters required for the covariate M-step");
    base.alpha = Vec::Constant(m, 1.0 / m);
    base.mu.assign(m, Vec::Zero(data.dim()));
    base.sigma.assign(m, Mat::Identity(data.dim(), data.dim()));
  }
  std::vector<double> w_cols(static_cast<size_t>(n) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      w_cols[static_cast<size_t>(j) * n + i] = weights(i, j);
  detail::EmOptions opts;
  opts.penalty = penalty;
  opts.homoscedastic = base.homoscedastic;
  MStepScratch scratch;
  return m_step_impl(w_cols, data, opts, base, nullptr, scratch);
}

namespace detail {

double chain_objective(const Dataset& data, const MixtureParams& params,
                       const EmOptions& opts, double* loglik_out) {
  std::vector<double> weights;
  RowMat xa = adjusted_x(data, params);
  const double ll = estep_batch(params, xa, weights);
  if (loglik_out) *loglik_out = ll;
  double obj = ll + penalty_total(params, opts.penalty);
  if (opts.pair_index >= 0) obj += tau_penalty(tau_of(params, opts));
  return obj;
}

ChainResult run_em_chain(const Dataset& data, const MixtureParams& start,
                         const EmOptions& opts, int max_iter, double rel_tol) {
  ChainResult res;
  res.params = start;
  std::vector<double> weights;
  MStepScratch scratch;
  RowMat xa = adjusted_x(data, res.params);
  double ll = estep_batch(res.params, xa, weights);
  double pl = ll + penalty_total(res.params, opts.penalty);
  if (opts.pair_index >= 0) pl += tau_penalty(tau_of(res.params, opts));

  for (int it = 1; it <= max_iter; ++it) {
    MixtureParams next =
        m_step_impl(weights, data, opts, res.params, &res.floor_count, scratch);
    xa = adjusted_x(data, next);
    const double ll_new = estep_batch(next, xa, weights);
    double pl_new = ll_new + penalty_total(next, opts.penalty);
    if (opts.pair_index >= 0) pl_new += tau_penalty(tau_of(next, opts));

    res.monotonicity_violation =
        std::max(res.monotonicity_violation, pl - pl_new);
    const bool converged = std::abs(pl_new - pl) < rel_tol * (1.0 + std::abs(pl_new));
    res.params = std::move(next);
    ll = ll_new;
    pl = pl_new;
    res.iterations = it;
    if (converged) {
      res.converged = true;
      break;
    }
  }
  res.loglik = ll;
  res.penalized = pl;
  res.tau = tau_of(res.params, opts);
  return res;
}

ChainResult em_cycle(const Dataset& data, const MixtureParams& params,
                     const EmOptions& opts) {
  ChainResult res;
  std::vector<double> weights;
  MStepScratch scratch;
  RowMat xa = adjusted_x(data, params);
  estep_batch(params, xa, weights);
  res.params = m_step_impl(weights, data, opts, params, &res.floor_count, scratch);
  xa = adjusted_x(data, res.params);
  res.loglik = estep_batch(res.params, xa, weights);
  res.penalized = res.loglik + penalty_total(res.params, opts.penalty);
  if (opts.pair_index >= 0) res.penalized += tau_penalty(tau_of(res.params, opts));
  res.tau = tau_of(res.params, opts);
  res.iterations = 1;
  res.converged = true;
  return res;
}

std::vector<MixtureParams> default_starts(const Dataset& data, int M,
                                          const EMConfig& config,
                                          bool homoscedastic) {
  const int n = data.n();
  const int d = data.dim();

  std::optional<Mat> gamma0;
  RowMat xa = data.x;
  if (data.z) {
    // initial gamma from centered least squares of x on z
    const RowMat& z = *data.z;
    const int p = data.covariate_dim();
    Vec xbar = data.x.colwise().mean().transpose();
    Vec zbar = z.colwise().mean().transpose();
    Mat szz = Mat::Zero(p, p);
    Mat sxz = Mat::Zero(d, p);
    for (int i = 0; i < n; ++i) {
      Vec zc = z.row(i).transpose() - zbar;
      Vec xc = data.x.row(i).transpose() - xbar;
      szz.noalias() += zc * zc.transpose();
      sxz.noalias() += xc * zc.transpose();
    }
    gamma0 = sxz * szz.ldlt().solve(Mat::Identity(p, p));
    xa = data.x - z * gamma0->transpose();
  }

  Vec grand_mean = xa.colwise().mean().transpose();
  Mat pooled = Mat::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    Vec c = xa.row(i).transpose() - grand_mean;
    pooled.noalias() += c * c.transpose();
  }
  pooled /= static_cast<double>(n);
  floor_covariance(pooled, std::max(pooled.trace(), 1e-12), nullptr);

  auto blank = [&]() {
    MixtureParams p;
    p.alpha = Vec::Constant(M, 1.0 / M);
    p.mu.assign(M, grand_mean);
    p.homoscedastic = homoscedastic;
    p.sigma.assign(homoscedastic ? 1 : M, pooled);
    p.gamma = gamma0;
    return p;
  };

  std::vector<MixtureParams> starts;
  if (M == 1) {
    starts.push_back(blank());
    return starts;
  }

  // start 0: k-means style seeding plus a few Lloyd rounds
  {
    Rng rng = make_stream(config.seed, 0);
    std::vector<int> centers;
    centers.push_back(static_cast<int>(rng.uniform_index(n)));
    Vec dist2(n);
    for (int c = 1; c < M; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int idx : centers)
          best = std::min(best, (xa.row(i) - xa.row(idx)).squaredNorm());
        dist2[i] = best;
        total += best;
      }
      double u = rng.uniform() * total;
      int pick = n - 1;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += dist2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      centers.push_back(pick);
    }
    Mat centroid(M, d);
    for (int c = 0; c < M; ++c) centroid.row(c) = xa.row(centers[c]);
    std::vector<int> assign(n, 0);
    for (int round = 0; round < 10; ++round) {
      for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < M; ++c) {
          const double dd = (xa.row(i) - centroid.row(c)).squaredNorm();
          if (dd < best) {
            best = dd;
            assign[i] = c;
          }
        }
      }
      Mat sums = Mat::Zero(M, d);
      std::vector<int> counts(M, 0);
      for (int i = 0; i < n; ++i) {
        sums.row(assign[i]) += xa.row(i);
        counts[assign[i]]++;
      }
      for (int c = 0; c < M; ++c)
        if (counts[c] > 0) centroid.row(c) = sums.row(c) / counts[c];
    }
    MixtureParams p = blank();
    std::vector<int> counts(M, 0);
    for (int i = 0; i < n; ++i) counts[assign[i]]++;
    for (int c = 0; c < M; ++c) {
      p.mu[c] = centroid.row(c).transpose();
      p.alpha[c] = std::max(counts[c], 1);
    }
    p.alpha /= p.alpha.sum();
    if (!homoscedastic) {
      for (int c = 0; c < M; ++c) {
        if (counts[c] > d + 2) {
          Mat s = Mat::Zero(d, d);
          for (int i = 0; i < n; ++i) {
            if (assign[i] != c) continue;
            Vec r = xa.row(i).transpose() - p.mu[c];
            s.noalias() += r * r.transpose();
          }
          s /= static_cast<double>(counts[c]);
          floor_covariance(s, std::max(pooled.trace(), 1e-12), nullptr);
          p.sigma[c] = s;
        }
      }
    }
    starts.push_back(std::move(p));
  }

  // remaining starts: means at distinct random data rows, pooled covariance
  for (int s = 1; s < config.n_starts; ++s) {
    Rng rng = make_stream(config.seed, s);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int c = 0; c < M; ++c) {
      const int pick = c + static_cast<int>(rng.uniform_index(n - c));
      std::swap(idx[c], idx[pick]);
    }
    MixtureParams p = blank();
    for (int c = 0; c < M; ++c) p.mu[c] = xa.row(idx[c]).transpose();
    starts.push_back(std::move(p));
  }
  return starts;
}

}  // namespace detail

FitResult one_component_mle(const Dataset& data) {
  data.validate();
  const int n = data.n();
  const int d = data.dim();

  MixtureParams p;
  p.alpha = Vec::Ones(1);
  p.mu.assign(1, Vec::Zero(d));
  p.sigma.assign(1, Mat::Identity(d, d));
  if (data.z) {
    // least-squares slope; the intercept below is then the exact joint MLE mean
    EMConfig cfg;
    cfg.n_starts = 1;
    p.gamma = detail::default_starts(data, 1, cfg, false)[0].gamma;
  }
  RowMat xa = data.x;
  if (p.gamma) xa -= (*data.z) * p.gamma->transpose();
  p.mu[0] = xa.colwise().mean().transpose();
  Mat s = Mat::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    Vec r = xa.row(i).transpose() - p.mu[0];
    s.noalias() += r * r.transpose();
  }
  s /= static_cast<double>(n);
  floor_covariance(s, std::max(s.trace(), 1e-12), nullptr);
  p.sigma[0] = s;

  FitResult res;
  res.params = p;
  res.loglik = log_likelihood(p, data);
  res.penalized_loglik = res.loglik;
  res.converged = true;
  res.iterations = 0;
  res.start_index = 0;
  return res;
}

namespace {

FitResult fit_multistart(const Dataset& data, int M, const EMConfig& config,
                         const detail::EmOptions& opts) {
  config.validate();
  data.validate();
  if (data.n() <= M * (data.dim() + 1))
    throw ArgumentError("sample too small for " + std::to_string(M) +
                        " components");

  auto starts = detail::default_starts(data, M, config, opts.homoscedastic);
  FitResult best;
  bool have_best = false;
  bool any_converged = false;
  int failures = 0;
  for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
    detail::ChainResult chain;
    try {
      chain = detail::run_em_chain(data, starts[s], opts, config.max_iter,
                                   config.rel_tol);
    } catch (const NumericError&) {
      ++failures;
      continue;
    }
    any_converged = any_converged || chain.converged;
    if (!have_best || chain.penalized > best.penalized_loglik) {
      best.params = canonicalize(chain.params);
      best.loglik = chain.loglik;
      best.penalized_loglik = chain.penalized;
      best.iterations = chain.iterations;
      best.converged = chain.converged;
      best.start_index = s;
      best.degeneracy_floor_count = chain.floor_count;
      best.monotonicity_violation = chain.monotonicity_violation;
      have_best = true;
    }
  }
  if (!have_best)
    throw NumericError("all " + std::to_string(starts.size()) +
                       " EM starts failed");
  if (!any_converged)
    throw NonConvergenceError("no EM start converged within max_iter", best);
  return best;
}

}  // namespace

FitResult fit_pmle(const Dataset& data, int M, const EMConfig& config,
                   const std::vector<Mat>& penalty_anchors) {
  detail::EmOptions opts;
  opts.penalty.a_n = config.a_n(data.n());
  opts.penalty.anchors = penalty_anchors;
  if (M == 1) {
    // closed form: the penalty shifts only the covariance
    FitResult res = one_component_mle(data);
    const double a_n = opts.penalty.a_n;
    if (a_n > 0.0) {
      const int n = data.n();
      Mat s = res.params.sigma[0] * static_cast<double>(n);
      res.params.sigma[0] =
          (2.0 * a_n * opts.penalty.anchor(0) + s) / (2.0 * a_n + n);
      res.loglik = log_likelihood(res.params, data);
      res.penalized_loglik =
          res.loglik + penalty_total(res.params, opts.penalty);
    }
    return res;
  }
  return fit_multistart(data, M, config, opts);
}

FitResult fit_pmle(const Dataset& data, int M, const EMConfig& config) {
  FitResult base = one_component_mle(data);
  return fit_pmle(data, M, config, {base.params.sigma[0]});
}

FitResult fit_mle_homoscedastic(const Dataset& data, int M,
                                const EMConfig& config) {
  if (M == 1) return one_component_mle(data);
  detail::EmOptions opts;
  opts.homoscedastic = true;
  return fit_multistart(data, M, config, opts);
}

}  // namespace mixorder
