#include <algorithm>
#include <cmath>
#include <limits>

#include "mixorder/asymptotics.hpp"
#include "mixorder/parallel.hpp"

namespace mixorder::asymptotics {

int ConeSpec::lambda_dim() const {
  switch (kind) {
    case Kind::kHeteroJ1:
    case Kind::kHeteroJ2: return d + tri_size(d);
    case Kind::kHomoJ1: return d;
    case Kind::kHomoJ2: return d + 1;
  }
  return 0;
}

int ConeSpec::out_dim() const { return dim_mu3(d) + dim_mu4(d); }

ConeSpec ConeSpec::make(Kind kind, int d) {
  ConeSpec spec;
  spec.kind = kind;
  spec.d = d;
  return spec;
}

Vec ConeSpec::map(const Vec& lambda) const {
  if (lambda.size() != lambda_dim())
    throw ArgumentError("cone parameter dimension mismatch");
  Vec out(out_dim());
  switch (kind) {
    case Kind::kHeteroJ1: {
      const Vec lmu = lambda.head(d);
      const Vec lv = lambda.tail(tri_size(d));
      out << lambda_mu_v(lmu, lv), lambda_v2(lv);
      break;
    }
    case Kind::kHeteroJ2: {
      const Vec lmu = lambda.head(d);
      const Vec lv = lambda.tail(tri_size(d));
      out << lambda_mu_v(lmu, lv), -lambda_mu4(lmu);
      break;
    }
    case Kind::kHomoJ1: {
      out.setZero();
      out.head(dim_mu3(d)) = lambda_mu3(lambda);
      break;
    }
    case Kind::kHomoJ2: {
      const Vec lmu = lambda.head(d);
      const double c = lambda[d];
      out << c * lambda_mu3(lmu), -lambda_mu4(lmu);
      break;
    }
  }
  return out;
}

namespace {

// Nelder-Mead on f: R^k -> R. Small, allocation-light; good enough as a
// global-phase optimizer before the least-squares polish.
Vec nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                double scale, int max_iter) {
  const int k = static_cast<int>(x0.size());
  std::vector<Vec> pts(k + 1, x0);
  std::vector<double> vals(k + 1);
  for (int i = 1; i <= k; ++i) pts[i][i - 1] += scale;
  for (int i = 0; i <= k; ++i) vals[i] = f(pts[i]);

  for (int it = 0; it < max_iter; ++it) {
    // order: best .. worst
    std::vector<int> order(k + 1);
    for (int i = 0; i <= k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order[0], worst = order[k], second = order[k - 1];
    if (std::abs(vals[worst] - vals[best]) <=
        1e-13 * (std::abs(vals[best]) + 1e-300))
      break;

    Vec centroid = Vec::Zero(k);
    for (int i = 0; i <= k; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= k;

    Vec refl = centroid + (centroid - pts[worst]);
    double f_refl = f(refl);
    if (f_refl < vals[best]) {
      Vec expd = centroid + 2.0 * (centroid - pts[worst]);
      double f_expd = f(expd);
      if (f_expd < f_refl) {
        pts[worst] = expd;
        vals[worst] = f_expd;
      } else {
        pts[worst] = refl;
        vals[worst] = f_refl;
      }
    } else if (f_refl < vals[second]) {
      pts[worst] = refl;
      vals[worst] = f_refl;
    } else {
      Vec contr = centroid + 0.5 * (pts[worst] - centroid);
      double f_contr = f(contr);
      if (f_contr < vals[worst]) {
        pts[worst] = contr;
        vals[worst] = f_contr;
      } else {
        for (int i = 0; i <= k; ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          vals[i] = f(pts[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= k; ++i)
    if (vals[i] < vals[best]) best = i;
  return pts[best];
}

// Levenberg-Marquardt on residual g(lambda) = U (T(lambda) - z), numerical
// Jacobian; drives locally optimal points to high precision.
Vec lm_polish(const std::function<Vec(const Vec&)>& residual, Vec lambda,
              int max_iter) {
  const int k = static_cast<int>(lambda.size());
  Vec g = residual(lambda);
  double cost = g.squaredNorm();
  double mu = 1e-3;
  const double h = 1e-6;
  for (int it = 0; it < max_iter; ++it) {
    const int m = static_cast<int>(g.size());
    Mat jac(m, k);
    for (int a = 0; a < k; ++a) {
      Vec lp = lambda, lm = lambda;
      const double step = h * (1.0 + std::abs(lambda[a]));
      lp[a] += step;
      lm[a] -= step;
      jac.col(a) = (residual(lp) - residual(lm)) / (2.0 * step);
    }
    const Mat jtj = jac.transpose() * jac;
    const Vec jtg = jac.transpose() * g;
    bool improved = false;
    for (int tries = 0; tries < 8; ++tries) {
      Mat lhs = jtj;
      lhs.diagonal().array() += mu * (jtj.diagonal().array() + 1e-12);
      Vec delta = lhs.ldlt().solve(-jtg);
      Vec cand = lambda + delta;
      Vec gc = residual(cand);
      const double cc = gc.squaredNorm();
      if (cc < cost) {
        lambda = cand;
        g = gc;
        const double rel = (cost - cc) / (cost + 1e-300);
        cost = cc;
        mu = std::max(mu * 0.3, 1e-12);
        improved = true;
        if (rel < 1e-14) return lambda;
        break;
      }
      mu *= 4.0;
    }
    if (!improved) break;
  }
  return lambda;
}

}  // namespace

ConeProjection cone_project(const Vec& z, const Mat& info, const ConeSpec& cone,
                            int multistart, Rng& rng) {
  if (z.size() != cone.out_dim()) throw ArgumentError("z dimension mismatch");
  if (info.rows() != z.size() || info.cols() != z.size())
    throw ArgumentError("info dimension mismatch");
  Mat reg = info;
  reg.diagonal().array() += 1e-12 * (info.trace() / info.rows() + 1.0);
  Eigen::LLT<Mat> llt(reg);
  if (llt.info() != Eigen::Success)
    throw NumericError("cone projection: information matrix not PSD");
  const Mat u = Mat(llt.matrixL()).transpose();

  auto residual = [&](const Vec& lam) -> Vec { return u * (cone.map(lam) - z); };
  auto objective = [&](const Vec& lam) -> double {
    return residual(lam).squaredNorm();
  };

  const int k = cone.lambda_dim();
  const double znorm = z.norm();
  const double r0 = (u * z).squaredNorm();  // r at lambda = 0

  ConeProjection best;
  best.lambda_hat = Vec::Zero(k);
  best.t_hat = Vec::Zero(z.size());
  best.r_min = r0;

  const int nm_iters = std::max(250, 80 * k);
  for (int s = 0; s < std::max(multistart, 1); ++s) {
    Vec start(k);
    if (s == 0) {
      start.setZero();
    } else {
      for (int a = 0; a < k; ++a) start[a] = rng.normal();
      // scale the direction so the image magnitude is comparable to |z|
      double lo = 1e-4, hi = 1e4;
      for (int it = 0; it < 40; ++it) {
        const double c = std::sqrt(lo * hi);
        const double tn = cone.map(c * start).norm();
        if (tn < znorm)
          lo = c;
        else
          hi = c;
      }
      start *= std::sqrt(lo * hi);
    }
    Vec lam = start;
    if (s > 0) lam = nelder_mead(objective, lam, 0.25 * (1.0 + lam.norm()), nm_iters);
    lam = lm_polish(residual, lam, 40);
    const double r = objective(lam);
    if (r < best.r_min) {
      best.r_min = r;
      best.lambda_hat = lam;
      best.t_hat = cone.map(lam);
    }
  }
  const double zIz = z.dot(info * z);
  // evaluate r at the regularized metric consistently with zIz
  best.r_min = (best.t_hat - z).dot(info * (best.t_hat - z));
  if (best.r_min > zIz) {  // lambda = 0 is always feasible
    best.r_min = zIz;
    best.lambda_hat.setZero();
    best.t_hat.setZero();
  }
  best.v = zIz - best.r_min;
  return best;
}

double LimitDistribution::quantile(double level) const {
  if (samples.empty()) throw ArgumentError("empty limit distribution");
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("level in (0,1)");
  const auto b = static_cast<std::ptrdiff_t>(samples.size());
  std::ptrdiff_t rank = static_cast<std::ptrdiff_t>(
      std::ceil(level * static_cast<double>(b)));
  rank = std::clamp<std::ptrdiff_t>(rank, 1, b);
  return samples[rank - 1];
}

namespace {

Mat chol_with_jitter(const Mat& c) {
  Mat reg = c;
  const double scale = std::max(c.diagonal().maxCoeff(), 1e-30);
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::LLT<Mat> llt(reg);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    reg.diagonal().array() += scale * std::pow(10.0, attempt - 10.0);
  }
  throw NumericError("simulated covariance is not PSD after jitter");
}

}  // namespace

LimitDistribution simulate_limit_hetero(const ScoreSystem& info, int draws,
                                        Rng& rng, int jobs, int multistart) {
  if (info.variant != Variant::kHetero)
    throw ArgumentError("score system is not heteroscedastic");
  const int m0 = info.M0;
  const int block = info.block;
  const Mat l = chol_with_jitter(info.i_lambda_dot_eta);
  std::vector<Mat> blocks(m0);
  std::vector<Eigen::LDLT<Mat>> solvers(m0);
  for (int m = 0; m < m0; ++m) {
    blocks[m] = info.component_block(m);
    solvers[m].compute(blocks[m]);
  }
  const ConeSpec cone1 = ConeSpec::make(ConeSpec::Kind::kHeteroJ1, info.d);
  const ConeSpec cone2 = ConeSpec::make(ConeSpec::Kind::kHeteroJ2, info.d);

  const std::uint64_t base_seed = rng.next_u64();
  std::vector<double> values(draws,
                             std::numeric_limits<double>::quiet_NaN());
  parallel_for(draws, jobs, [&](std::size_t i) {
    Rng draw_rng = make_stream(base_seed, i);
    Vec xi(l.cols());
    for (int a = 0; a < xi.size(); ++a) xi[a] = draw_rng.normal();
    const Vec g = l * xi;
    double value = -std::numeric_limits<double>::infinity();
    try {
      for (int m = 0; m < m0; ++m) {
        const Vec gm = g.segment(m * block, block);
        const Vec zm = solvers[m].solve(gm);
        const double zIz = zm.dot(gm);
        const double r1 = cone_project(zm, blocks[m], cone1, multistart, draw_rng).r_min;
        const double r2 = cone_project(zm, blocks[m], cone2, multistart, draw_rng).r_min;
        value = std::max(value, zIz - std::min(r1, r2));
      }
      values[i] = value;
    } catch (const NumericError&) {
      // left as NaN, counted below
    }
  });

  LimitDistribution out;
  out.samples.reserve(draws);
  for (double v : values) {
    if (std::isnan(v))
      ++out.failed_draws;
    else
      out.samples.push_back(v);
  }
  if (out.failed_draws * 1000 > draws)
    throw NumericError("more than 0.1% of limit draws failed");
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

LimitDistribution simulate_limit_homo(const ScoreSystem& info, int draws,
                                      Rng& rng, int jobs, int multistart) {
  if (info.variant != Variant::kHomo)
    throw ArgumentError("score system is not homoscedastic");
  if (info.lambda_grid.empty())
    throw ArgumentError("homoscedastic limit needs a lambda grid");
  const int m0 = info.M0;
  const int block = info.block;
  const int grid = static_cast<int>(info.lambda_grid.size());
  const int dl = m0 * block;

  const Mat l = chol_with_jitter(info.sim_cov);
  std::vector<Mat> blocks(m0);
  std::vector<Eigen::LDLT<Mat>> solvers(m0);
  for (int m = 0; m < m0; ++m) {
    blocks[m] = info.component_block(m);
    solvers[m].compute(blocks[m]);
  }
  // per grid point variance of the alpha score, Schur-complemented
  std::vector<Vec> alpha_var(m0, Vec(grid));
  for (int m = 0; m < m0; ++m)
    for (int g = 0; g < grid; ++g) {
      const int idx = dl + m * grid + g;
      alpha_var[m][g] = info.sim_cov(idx, idx);
    }

  const ConeSpec cone1 = ConeSpec::make(ConeSpec::Kind::kHomoJ1, info.d);
  const ConeSpec cone2 = ConeSpec::make(ConeSpec::Kind::kHomoJ2, info.d);

  const std::uint64_t base_seed = rng.next_u64();
  std::vector<double> values(draws, std::numeric_limits<double>::quiet_NaN());
  parallel_for(draws, jobs, [&](std::size_t i) {
    Rng draw_rng = make_stream(base_seed, i);
    Vec xi(l.cols());
    for (int a = 0; a < xi.size(); ++a) xi[a] = draw_rng.normal();
    const Vec gall = l * xi;
    double value = -std::numeric_limits<double>::infinity();
    try {
      for (int m = 0; m < m0; ++m) {
        const Vec gm = gall.segment(m * block, block);
        const Vec zm = solvers[m].solve(gm);
        const double zIz = zm.dot(gm);
        const double r1 =
            cone_project(zm, blocks[m], cone1, multistart, draw_rng).r_min;
        const double r2 =
            cone_project(zm, blocks[m], cone2, multistart, draw_rng).r_min;
        double vm = zIz - std::min(r1, r2);
        // Gaussian-process part: one-sided projection per grid point
        for (int g = 0; g < grid; ++g) {
          const double var = alpha_var[m][g];
          if (!(var > 1e-14)) continue;
          const double ga = gall[dl + m * grid + g];
          const double pos = std::max(ga, 0.0);
          vm = std::max(vm, pos * pos / var);
        }
        value = std::max(value, vm);
      }
      values[i] = value;
    } catch (const NumericError&) {
    }
  });

  LimitDistribution out;
  out.samples.reserve(draws);
  for (double v : values) {
    if (std::isnan(v))
      ++out.failed_draws;
    else
      out.samples.push_back(v);
  }
  if (out.failed_draws * 1000 > draws)
    throw NumericError("more than 0.1% of limit draws failed");
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

}  // namespace mixorder::asymptotics
