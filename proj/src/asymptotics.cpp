#include "mixorder/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mixorder/mvn.hpp"

namespace mixorder::asymptotics {

std::vector<std::array<int, 3>> index_triples(int d) {
  std::vector<std::array<int, 3>> out;
  out.reserve(dim_mu3(d));
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k) out.push_back({i, j, k});
  return out;
}

std::vector<std::array<int, 4>> index_quads(int d) {
  std::vector<std::array<int, 4>> out;
  out.reserve(dim_mu4(d));
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k)
        for (int l = k; l < d; ++l) out.push_back({i, j, k, l});
  return out;
}

namespace {

int vpos(int a, int b, int d) {  // upper-triangle position of (a,b), a<=b
  if (a > b) std::swap(a, b);
  return a * d - a * (a - 1) / 2 + (b - a);
}

template <int N>
std::set<std::array<int, N>> distinct_perms(std::array<int, N> v) {
  std::sort(v.begin(), v.end());
  std::set<std::array<int, N>> out;
  do {
    out.insert(v);
  } while (std::next_permutation(v.begin(), v.end()));
  return out;
}

}  // namespace

Vec lambda_mu_v(const Vec& lmu, const Vec& lv) {
  const int d = static_cast<int>(lmu.size());
  if (lv.size() != tri_size(d)) throw ArgumentError("lambda_v length mismatch");
  auto triples = index_triples(d);
  Vec out(static_cast<int>(triples.size()));
  for (size_t t = 0; t < triples.size(); ++t) {
    double acc = 0.0;
    for (const auto& p : distinct_perms<3>(triples[t]))
      if (p[1] <= p[2]) acc += lmu[p[0]] * lv[vpos(p[1], p[2], d)];
    out[static_cast<int>(t)] = acc;
  }
  return out;
}

Vec lambda_v2(const Vec& lv) {
  const int d = tri_dim(static_cast<int>(lv.size()));
  if (d < 1) throw ArgumentError("lambda_v length is not triangular");
  auto quads = index_quads(d);
  Vec out(static_cast<int>(quads.size()));
  for (size_t t = 0; t < quads.size(); ++t) {
    double acc = 0.0;
    for (const auto& p : distinct_perms<4>(quads[t]))
      if (p[0] <= p[1] && p[2] <= p[3])
        acc += lv[vpos(p[0], p[1], d)] * lv[vpos(p[2], p[3], d)];
    out[static_cast<int>(t)] = acc;
  }
  return out;
}

Vec lambda_mu4(const Vec& lmu) {
  const int d = static_cast<int>(lmu.size());
  auto quads = index_quads(d);
  Vec out(static_cast<int>(quads.size()));
  for (size_t t = 0; t < quads.size(); ++t) {
    double acc = 0.0;
    for (const auto& p : distinct_perms<4>(quads[t]))
      acc += lmu[p[0]] * lmu[p[1]] * lmu[p[2]] * lmu[p[3]];
    out[static_cast<int>(t)] = acc;
  }
  return out;
}

Vec lambda_mu3(const Vec& lmu) {
  const int d = static_cast<int>(lmu.size());
  auto triples = index_triples(d);
  Vec out(static_cast<int>(triples.size()));
  for (size_t t = 0; t < triples.size(); ++t) {
    double acc = 0.0;
    for (const auto& p : distinct_perms<3>(triples[t]))
      acc += lmu[p[0]] * lmu[p[1]] * lmu[p[2]];
    out[static_cast<int>(t)] = acc;
  }
  return out;
}

HeteroComponents reparam_hetero(const Vec& nu_mu, const Vec& nu_v,
                                const Vec& lambda_mu, const Vec& lambda_v,
                                double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must be in (0,1)");
  const double c1 = -(1.0 + alpha) / 3.0;
  const double c2 = (2.0 - alpha) / 3.0;
  const Vec w_ll = mvn::w_of_sigma(lambda_mu * lambda_mu.transpose());
  HeteroComponents out;
  out.mu1 = nu_mu + (1.0 - alpha) * lambda_mu;
  out.mu2 = nu_mu - alpha * lambda_mu;
  out.v1 = nu_v + (1.0 - alpha) * (2.0 * lambda_v + c1 * w_ll);
  out.v2 = nu_v - alpha * (2.0 * lambda_v + c2 * w_ll);
  return out;
}

HeteroReparam reparam_hetero_inverse(const Vec& mu1, const Vec& mu2,
                                     const Vec& v1, const Vec& v2,
                                     double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must be in (0,1)");
  HeteroReparam out;
  out.lambda_mu = mu1 - mu2;
  out.nu_mu = alpha * mu1 + (1.0 - alpha) * mu2;
  const Vec w_ll = mvn::w_of_sigma(out.lambda_mu * out.lambda_mu.transpose());
  // (1-a)C1 + aC2 = (2a-1)/3 and C1 - C2 = -1
  out.lambda_v = 0.5 * (v1 - v2 - ((2.0 * alpha - 1.0) / 3.0) * w_ll);
  out.nu_v = alpha * v1 + (1.0 - alpha) * v2 + alpha * (1.0 - alpha) * w_ll;
  return out;
}

HomoComponents reparam_homo(const Vec& nu_mu, const Vec& nu_v,
                            const Vec& lambda, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must be in (0,1)");
  HomoComponents out;
  out.mu1 = nu_mu + (1.0 - alpha) * lambda;
  out.mu2 = nu_mu - alpha * lambda;
  out.v = nu_v - alpha * (1.0 - alpha) * mvn::w_of_sigma(lambda * lambda.transpose());
  return out;
}

// ---------------------------------------------------------------------------
// scores

struct ScoreEvaluator::Component {
  Vec mu;
  Mat prec;
  double lognorm = 0.0;
  double alpha = 0.0;
};

ScoreEvaluator::ScoreEvaluator(const MixtureParams& theta_star, Variant variant,
                               std::vector<Vec> lambda_grid)
    : theta_(canonicalize(theta_star)),
      variant_(variant),
      grid_(std::move(lambda_grid)) {
  theta_.validate();
  if (variant_ == Variant::kHomo && theta_.components() > 1 &&
      !theta_.homoscedastic)
    throw ArgumentError("homoscedastic variant requires a shared covariance");
  const int d = theta_.dim();
  const int m0 = theta_.components();
  const int p = theta_.covariate_dim();
  triples_ = index_triples(d);
  quads_ = index_quads(d);
  block_ = static_cast<int>(triples_.size() + quads_.size());
  eta_dim_ = (m0 - 1) + p * d + d + tri_size(d);
  lambda_dim_ = m0 * block_;
  alpha_dim_ =
      (variant_ == Variant::kHomo) ? m0 * static_cast<int>(grid_.size()) : 0;
  for (const Vec& g : grid_)
    if (g.size() != d || g.norm() == 0.0)
      throw ArgumentError("lambda grid entries must be nonzero d-vectors");

  comps_.resize(m0);
  for (int m = 0; m < m0; ++m) {
    mvn::SpdChol chol(theta_.sigma_of(m));
    comps_[m].mu = theta_.mu[m];
    comps_[m].prec = chol.inverse();
    comps_[m].lognorm = -0.5 * (d * kLog2Pi + chol.log_det());
    comps_[m].alpha = theta_.alpha[m];
  }
}

ScoreEvaluator::~ScoreEvaluator() = default;
ScoreEvaluator::ScoreEvaluator(ScoreEvaluator&&) noexcept = default;

void ScoreEvaluator::evaluate(const Vec& x, const std::optional<Vec>& z,
                              double* s_eta, double* s_lambda,
                              double* s_alpha) const {
  const int d = theta_.dim();
  const int m0 = theta_.components();
  const int p = theta_.covariate_dim();
  if (static_cast<bool>(z) != (p > 0))
    throw ArgumentError("covariate mismatch in score evaluation");

  Vec xa = x;
  if (p > 0) xa -= (*theta_.gamma) * (*z);

  std::vector<Vec> ys(m0);
  std::vector<double> fs(m0);
  double f0 = 0.0;
  for (int m = 0; m < m0; ++m) {
    const Component& c = comps_[m];
    const Vec r = xa - c.mu;
    ys[m] = c.prec * r;
    fs[m] = std::exp(c.lognorm - 0.5 * r.dot(ys[m]));
    f0 += c.alpha * fs[m];
  }
  if (!(f0 > 0.0)) throw NumericError("zero density in score evaluation");

  // eta block: weight scores, then (gamma, mu, v)
  int pos = 0;
  for (int m = 0; m + 1 < m0; ++m) s_eta[pos++] = (fs[m] - fs[m0 - 1]) / f0;
  Vec grad_mu = Vec::Zero(d);
  Vec grad_v = Vec::Zero(tri_size(d));
  for (int m = 0; m < m0; ++m) {
    const Component& c = comps_[m];
    const double w = c.alpha * fs[m];
    grad_mu += w * ys[m];
    int t = 0;
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b, ++t)
        grad_v[t] += 0.5 * w * (ys[m][a] * ys[m][b] - c.prec(a, b));
  }
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < d; ++i) s_eta[pos++] = grad_mu[i] * (*z)[j] / f0;
  for (int i = 0; i < d; ++i) s_eta[pos++] = grad_mu[i] / f0;
  for (int t = 0; t < grad_v.size(); ++t) s_eta[pos++] = grad_v[t] / f0;

  // per-component third/fourth-order mean-derivative blocks
  pos = 0;
  for (int m = 0; m < m0; ++m) {
    const Mat& pr = comps_[m].prec;
    const Vec& y = ys[m];
    const double scale3 = comps_[m].alpha * fs[m] / (6.0 * f0);
    const double scale4 = comps_[m].alpha * fs[m] / (24.0 * f0);
    for (const auto& [i, j, k] : triples_) {
      const double h3 = y[i] * y[j] * y[k] -
                        (pr(i, j) * y[k] + pr(i, k) * y[j] + pr(j, k) * y[i]);
      s_lambda[pos++] = scale3 * h3;
    }
    for (const auto& [i, j, k, l] : quads_) {
      const double h4 =
          y[i] * y[j] * y[k] * y[l] -
          (pr(i, j) * y[k] * y[l] + pr(i, k) * y[j] * y[l] +
           pr(i, l) * y[j] * y[k] + pr(j, k) * y[i] * y[l] +
           pr(j, l) * y[i] * y[k] + pr(k, l) * y[i] * y[j]) +
          (pr(i, j) * pr(k, l) + pr(i, k) * pr(j, l) + pr(i, l) * pr(j, k));
      s_lambda[pos++] = scale4 * h4;
    }
  }

  // homoscedastic Gaussian-process block on the lambda grid
  if (alpha_dim_ > 0) {
    pos = 0;
    for (int m = 0; m < m0; ++m) {
      const Component& c = comps_[m];
      const Vec r = xa - c.mu;
      const Vec& y = ys[m];
      for (const Vec& lam : grid_) {
        const Vec rl = r - lam;
        const double f_shift = std::exp(c.lognorm - 0.5 * rl.dot(c.prec * rl));
        const double ylam = y.dot(lam);
        const double lin = fs[m] * ylam;
        const double quad = 0.5 * fs[m] * (ylam * ylam - lam.dot(c.prec * lam));
        const double num = f_shift - fs[m] - lin - quad;
        const double n3 = std::pow(lam.norm(), 3.0);
        s_alpha[pos++] = c.alpha * num / (n3 * f0);
      }
    }
  }
}

Vec ScoreEvaluator::evaluate_stacked(const Vec& x,
                                     const std::optional<Vec>& z) const {
  Vec out(eta_dim_ + lambda_dim_ + alpha_dim_);
  evaluate(x, z, out.data(), out.data() + eta_dim_,
           out.data() + eta_dim_ + lambda_dim_);
  return out;
}

Vec hetero_scores(const Vec& x, const std::optional<Vec>& z,
                  const MixtureParams& theta_star) {
  ScoreEvaluator ev(theta_star, Variant::kHetero);
  return ev.evaluate_stacked(x, z);
}

Vec homo_scores(const Vec& x, const std::optional<Vec>& z,
                const MixtureParams& theta_star,
                const std::vector<Vec>& lambda_grid) {
  ScoreEvaluator ev(theta_star, Variant::kHomo, lambda_grid);
  return ev.evaluate_stacked(x, z);
}

// ---------------------------------------------------------------------------
// information estimation

Mat ScoreSystem::component_block(int m) const {
  return i_lambda_dot_eta.block(m * block, m * block, block, block);
}

std::vector<Vec> default_lambda_grid(const Mat& sigma_star, int directions) {
  const int d = static_cast<int>(sigma_star.rows());
  const double base = std::sqrt(sigma_star.trace() / d);
  const std::vector<double> radii = {0.25, 0.5, 1.0, 1.5, 2.0};
  std::vector<Vec> dirs;
  if (d == 1) {
    dirs.push_back(Vec::Constant(1, 1.0));
    dirs.push_back(Vec::Constant(1, -1.0));
  } else if (d == 2) {
    for (int k = 0; k < directions; ++k) {
      const double th = 2.0 * M_PI * k / directions;
      Vec u(2);
      u << std::cos(th), std::sin(th);
      dirs.push_back(u);
    }
  } else {
    Rng rng = make_rng(0x9D1CEu);
    for (int k = 0; k < std::max(directions, 2 * d); ++k) {
      Vec u(d);
      for (int a = 0; a < d; ++a) u[a] = rng.normal();
      dirs.push_back(u / u.norm());
    }
  }
  std::vector<Vec> grid;
  grid.reserve(dirs.size() * radii.size());
  for (const Vec& u : dirs)
    for (double r : radii) grid.push_back(r * base * u);
  return grid;
}

ScoreSystem estimate_information(const MixtureParams& theta_star, int n_mc,
                                 Rng& rng, Variant variant,
                                 std::vector<Vec> lambda_grid) {
  if (n_mc < 100) throw ArgumentError("n_mc too small");
  if (theta_star.gamma)
    throw ArgumentError("information estimation supports covariate-free models");
  ScoreEvaluator ev(theta_star, variant, std::move(lambda_grid));

  const int de = ev.eta_dim();
  const int dl = ev.lambda_dim();
  const int da = ev.alpha_grid_dim();
  const int du = dl + da;

  Mat i_eta = Mat::Zero(de, de);
  Mat i_ue = Mat::Zero(du, de);
  Mat i_u = Mat::Zero(du, du);

  constexpr int kChunk = 256;
  Mat e_chunk(de, kChunk);
  Mat u_chunk(du, kChunk);
  int filled = 0;
  auto flush = [&]() {
    if (filled == 0) return;
    auto e = e_chunk.leftCols(filled);
    auto u = u_chunk.leftCols(filled);
    i_eta.noalias() += e * e.transpose();
    i_ue.noalias() += u * e.transpose();
    i_u.noalias() += u * u.transpose();
    filled = 0;
  };

  Dataset draws = sample(ev.theta(), n_mc, rng);
  for (int i = 0; i < n_mc; ++i) {
    Vec x = draws.x.row(i).transpose();
    ev.evaluate(x, std::nullopt, e_chunk.col(filled).data(),
                u_chunk.col(filled).data(), u_chunk.col(filled).data() + dl);
    if (++filled == kChunk) flush();
  }
  flush();

  i_eta /= n_mc;
  i_ue /= n_mc;
  i_u /= n_mc;
  i_eta = 0.5 * (i_eta + i_eta.transpose()).eval();
  i_u = 0.5 * (i_u + i_u.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Mat> es(i_eta);
  const double emax = es.eigenvalues().cwiseAbs().maxCoeff();
  const double emin = es.eigenvalues().minCoeff();
  if (!(emin > 0.0) || emax / emin > 1e12)
    throw NumericError("eta information block is ill-conditioned");

  const Mat k = i_eta.ldlt().solve(i_ue.transpose());
  Mat c = i_u - i_ue * k;
  c = 0.5 * (c + c.transpose()).eval();

  ScoreSystem sys;
  sys.variant = variant;
  sys.d = ev.theta().dim();
  sys.M0 = ev.theta().components();
  sys.p = ev.theta().covariate_dim();
  sys.block = ev.block_size();
  sys.i_eta = std::move(i_eta);
  sys.i_lambda = i_u.topLeftCorner(dl, dl);
  sys.i_lambda_eta = i_ue.topRows(dl);
  sys.i_lambda_dot_eta = c.topLeftCorner(dl, dl);
  sys.sim_cov = std::move(c);
  sys.lambda_grid = ev.lambda_grid();
  sys.n_mc = n_mc;
  return sys;
}

// ---------------------------------------------------------------------------
// finite-difference verification of the reparameterized-density structure

namespace {

double fd_rec(const std::function<double(const Vec&)>& f, Vec& point,
              const std::vector<std::pair<int, double>>& vars, size_t k) {
  if (k == vars.size()) return f(point);
  const auto& [i, h] = vars[k];
  point[i] += h;
  const double up = fd_rec(f, point, vars, k + 1);
  point[i] -= 2.0 * h;
  const double dn = fd_rec(f, point, vars, k + 1);
  point[i] += h;
  return (up - dn) / (2.0 * h);
}

// nested five-point stencil, truncation O(h^4) per variable
double fd5_rec(const std::function<double(const Vec&)>& f, Vec& point,
               const std::vector<std::pair<int, double>>& vars, size_t k) {
  if (k == vars.size()) return f(point);
  const auto& [i, h] = vars[k];
  const double base = point[i];
  point[i] = base + 2.0 * h;
  const double p2 = fd5_rec(f, point, vars, k + 1);
  point[i] = base + h;
  const double p1 = fd5_rec(f, point, vars, k + 1);
  point[i] = base - h;
  const double m1 = fd5_rec(f, point, vars, k + 1);
  point[i] = base - 2.0 * h;
  const double m2 = fd5_rec(f, point, vars, k + 1);
  point[i] = base;
  return (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
}

double nested_fd(const std::function<double(const Vec&)>& f, const Vec& at,
                 const std::vector<int>& vars) {
  static const double steps[5] = {0.0, 1e-5, 1e-4, 5e-3, 6e-3};
  const double h = steps[vars.size()];
  std::vector<std::pair<int, double>> vh;
  vh.reserve(vars.size());
  for (int v : vars) vh.emplace_back(v, h);
  Vec point = at;
  if (vars.size() < 3) return fd_rec(f, point, vh, 0);
  return fd5_rec(f, point, vh, 0);
}

}  // namespace

VanishingReport check_vanishing_scores(const MixtureParams& theta_star,
                                       double alpha, Variant variant,
                                       double tol_vanish, double tol_identity,
                                       std::uint64_t seed) {
  if (theta_star.components() != 1 || theta_star.gamma)
    throw ArgumentError("vanishing-score check expects a one-component model");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must be in (0,1)");
  const int d = theta_star.dim();
  const Vec mu_star = theta_star.mu[0];
  const Mat sigma_star = theta_star.sigma[0];
  const Vec v_star = mvn::w_of_sigma(sigma_star);
  const int ntri = tri_size(d);

  VanishingReport report;
  Rng rng = make_rng(seed);
  std::vector<Vec> points;
  {
    mvn::SpdChol chol(sigma_star);
    for (int t = 0; t < 3; ++t) {
      Vec xi(d);
      for (int a = 0; a < d; ++a) xi[a] = 0.35 + 0.55 * rng.uniform();
      points.push_back(mu_star + chol.chol_lower() * xi);
    }
  }

  auto add_check = [&](const std::string& label, double fd, double ref,
                       bool vanishing, double ref_scale) {
    VanishingCheck c;
    c.label = label;
    c.value = fd;
    c.reference = ref;
    c.vanishing = vanishing;
    if (vanishing) {
      c.error = std::abs(fd - ref);
      c.pass = c.error <= tol_vanish;
      report.max_vanishing_error = std::max(report.max_vanishing_error, c.error);
    } else {
      c.error = std::abs(fd - ref) / std::max(std::abs(ref), 0.02 * ref_scale);
      c.pass = c.error <= tol_identity;
      report.max_identity_error = std::max(report.max_identity_error, c.error);
    }
    report.all_pass = report.all_pass && c.pass;
    report.checks.push_back(std::move(c));
  };

  const double b_alpha = -(2.0 / 3.0) * (alpha * alpha - alpha + 1.0);
  const double c_alpha = alpha * (1.0 - alpha);

  for (size_t pt = 0; pt < points.size(); ++pt) {
    const Vec& x = points[pt];
    const std::string tag = "x" + std::to_string(pt) + ":";

    if (variant == Variant::kHetero) {
      // psi = (lambda_mu (d), lambda_v (ntri)), nu fixed at the truth
      auto g = [&](const Vec& psi) {
        const Vec lmu = psi.head(d);
        const Vec lv = psi.tail(ntri);
        HeteroComponents c = reparam_hetero(mu_star, v_star, lmu, lv, alpha);
        return alpha * mvn::density(x, c.mu1, mvn::sigma_of_v(c.v1)) +
               (1.0 - alpha) * mvn::density(x, c.mu2, mvn::sigma_of_v(c.v2));
      };
      const Vec at = Vec::Zero(d + ntri);

      for (int i = 0; i < d; ++i)
        add_check(tag + "d1_lmu", nested_fd(g, at, {i}), 0.0, true, 0);
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
          add_check(tag + "d2_lmu", nested_fd(g, at, {i, j}), 0.0, true, 0);
      for (const auto& [i, j, k] : index_triples(d))
        add_check(tag + "d3_lmu", nested_fd(g, at, {i, j, k}), 0.0, true, 0);
      for (int t = 0; t < ntri; ++t)
        add_check(tag + "d1_lv", nested_fd(g, at, {d + t}), 0.0, true, 0);

      double ref4_scale = 0.0;
      for (const auto& [i, j, k, l] : index_quads(d))
        ref4_scale = std::max(
            ref4_scale,
            std::abs(mvn::mu_derivative(x, mu_star, sigma_star, {i, j, k, l})));
      double ref3_scale = 0.0;
      for (const auto& [i, j, k] : index_triples(d))
        ref3_scale = std::max(
            ref3_scale,
            std::abs(mvn::mu_derivative(x, mu_star, sigma_star, {i, j, k})));

      for (const auto& [i, j, k, l] : index_quads(d)) {
        const double ref =
            c_alpha * b_alpha *
            mvn::mu_derivative(x, mu_star, sigma_star, {i, j, k, l});
        add_check(tag + "d4_lmu", nested_fd(g, at, {i, j, k, l}), ref, false,
                  ref4_scale);
      }
      for (int i = 0; i < d; ++i) {
        int t = 0;
        for (int a = 0; a < d; ++a)
          for (int b = a; b < d; ++b, ++t) {
            const double ref =
                c_alpha * mvn::mu_derivative(x, mu_star, sigma_star, {i, a, b});
            add_check(tag + "cross_lmu_lv", nested_fd(g, at, {i, d + t}), ref,
                      false, ref3_scale);
          }
      }
      {
        int t1 = 0;
        for (int a = 0; a < d; ++a)
          for (int b = a; b < d; ++b, ++t1) {
            int t2 = 0;
            for (int c2 = 0; c2 < d; ++c2)
              for (int e = c2; e < d; ++e, ++t2) {
                if (t2 < t1) continue;
                const double ref =
                    c_alpha *
                    mvn::mu_derivative(x, mu_star, sigma_star, {a, b, c2, e});
                add_check(tag + "d2_lv", nested_fd(g, at, {d + t1, d + t2}),
                          ref, false, ref4_scale);
              }
          }
      }
    } else {
      auto g = [&](const Vec& lam) {
        HomoComponents c = reparam_homo(mu_star, v_star, lam, alpha);
        const Mat sig = mvn::sigma_of_v(c.v);
        return alpha * mvn::density(x, c.mu1, sig) +
               (1.0 - alpha) * mvn::density(x, c.mu2, sig);
      };
      const Vec at = Vec::Zero(d);
      for (int i = 0; i < d; ++i)
        add_check(tag + "d1", nested_fd(g, at, {i}), 0.0, true, 0);
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
          add_check(tag + "d2", nested_fd(g, at, {i, j}), 0.0, true, 0);

      const double f3 = c_alpha * (1.0 - 2.0 * alpha);
      const double f4 = c_alpha * (1.0 - 6.0 * alpha + 6.0 * alpha * alpha);
      double ref3_scale = 0.0, ref4_scale = 0.0;
      for (const auto& [i, j, k] : index_triples(d))
        ref3_scale = std::max(
            ref3_scale,
            std::abs(mvn::mu_derivative(x, mu_star, sigma_star, {i, j, k})));
      for (const auto& [i, j, k, l] : index_quads(d))
        ref4_scale = std::max(
            ref4_scale,
            std::abs(mvn::mu_derivative(x, mu_star, sigma_star, {i, j, k, l})));
      for (const auto& [i, j, k] : index_triples(d)) {
        const double ref =
            f3 * mvn::mu_derivative(x, mu_star, sigma_star, {i, j, k});
        const bool as_vanishing = std::abs(f3) * ref3_scale < 10.0 * tol_vanish;
        add_check(tag + "d3", nested_fd(g, at, {i, j, k}),
                  as_vanishing ? 0.0 : ref, as_vanishing, ref3_scale);
      }
      for (const auto& [i, j, k, l] : index_quads(d)) {
        const double ref =
            f4 * mvn::mu_derivative(x, mu_star, sigma_star, {i, j, k, l});
        add_check(tag + "d4", nested_fd(g, at, {i, j, k, l}), ref, false,
                  ref4_scale);
      }
    }
  }
  return report;
}

}  // namespace mixorder::asymptotics
