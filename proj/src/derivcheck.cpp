#include "mixorder/derivcheck.hpp"

#include <cmath>

#include "mixorder/mvn.hpp"
#include "mixorder/rng.hpp"

namespace mixorder {

namespace {

double fd_rec_mu(const Vec& x, Vec& mu, const Mat& sigma,
                 const std::vector<int>& idx, size_t k, double h) {
  if (k == idx.size()) return mvn::density(x, mu, sigma);
  const int i = idx[k];
  mu[i] += h;
  const double up = fd_rec_mu(x, mu, sigma, idx, k + 1, h);
  mu[i] -= 2.0 * h;
  const double dn = fd_rec_mu(x, mu, sigma, idx, k + 1, h);
  mu[i] += h;
  return (up - dn) / (2.0 * h);
}

// nested five-point stencil, truncation O(h^4) per variable
double fd5_rec_mu(const Vec& x, Vec& mu, const Mat& sigma,
                  const std::vector<int>& idx, size_t k, double h) {
  if (k == idx.size()) return mvn::density(x, mu, sigma);
  const int i = idx[k];
  const double base = mu[i];
  mu[i] = base + 2.0 * h;
  const double p2 = fd5_rec_mu(x, mu, sigma, idx, k + 1, h);
  mu[i] = base + h;
  const double p1 = fd5_rec_mu(x, mu, sigma, idx, k + 1, h);
  mu[i] = base - h;
  const double m1 = fd5_rec_mu(x, mu, sigma, idx, k + 1, h);
  mu[i] = base - 2.0 * h;
  const double m2 = fd5_rec_mu(x, mu, sigma, idx, k + 1, h);
  mu[i] = base;
  return (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
}

}  // namespace

double fd_mu_derivative(const Vec& x, const Vec& mu, const Mat& sigma,
                        const std::vector<int>& idx, double h) {
  Vec m = mu;
  return fd_rec_mu(x, m, sigma, idx, 0, h);
}

double fd_mu_derivative_richardson(const Vec& x, const Vec& mu,
                                   const Mat& sigma, const std::vector<int>& idx,
                                   double h) {
  Vec m = mu;
  return fd5_rec_mu(x, m, sigma, idx, 0, h);
}

namespace {

double fd_v_point(const Vec& x, const Vec& mu, const Mat& sigma,
                  const std::vector<std::pair<int, int>>& pairs, double h,
                  bool five_point) {
  if (pairs.empty()) return mvn::density(x, mu, sigma);
  Vec v = mvn::w_of_sigma(sigma);
  const int d = static_cast<int>(x.size());
  auto vpos = [d](int a, int b) {
    if (a > b) std::swap(a, b);
    return a * d - a * (a - 1) / 2 + (b - a);
  };
  const auto [a, b] = pairs.front();
  const int t = vpos(a, b);
  const std::vector<std::pair<int, int>> rest(pairs.begin() + 1, pairs.end());
  auto eval = [&](double offset) {
    Vec vv = v;
    vv[t] += offset;
    return fd_v_point(x, mu, mvn::sigma_of_v(vv), rest, h, five_point);
  };
  if (!five_point) return (eval(h) - eval(-h)) / (2.0 * h);
  return (-eval(2.0 * h) + 8.0 * eval(h) - 8.0 * eval(-h) + eval(-2.0 * h)) /
         (12.0 * h);
}

}  // namespace

double fd_v_derivative(const Vec& x, const Vec& mu, const Mat& sigma,
                       const std::vector<std::pair<int, int>>& pairs,
                       double h) {
  return fd_v_point(x, mu, sigma, pairs, h, pairs.size() >= 2);
}

namespace {

// steps tuned per derivative order; orders 4-6 use the five-point stencil
constexpr double kMuStep[7] = {0, 1e-5, 1e-4, 8e-4, 8e-3, 1.2e-2, 2.2e-2};

Mat random_spd(int d, Rng& rng) {
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = 0.4 * rng.normal();
  Mat s = a * a.transpose();
  s.diagonal().array() += 0.8 + 0.6 * rng.uniform();
  return s;
}

}  // namespace

DerivCheckReport run_derivative_checks(int cases, std::uint64_t seed,
                                       double tol_fd, double tol_identity,
                                       double tol_v_fd, double tol_vanishing,
                                       double tol_lemma) {
  DerivCheckReport rep;
  rep.cases = cases;
  Rng rng = make_rng(seed);

  for (int c = 0; c < cases; ++c) {
    const int d = 1 + static_cast<int>(rng.uniform_index(3));
    const Mat sigma = random_spd(d, rng);
    Vec mu(d), x(d);
    for (int a = 0; a < d; ++a) {
      mu[a] = 2.0 * rng.uniform() - 1.0;
      x[a] = mu[a] + 1.6 * (rng.uniform() - 0.35);
    }
    const double f = mvn::density(x, mu, sigma);

    // analytic vs finite differences, one random index set per order
    for (int order = 1; order <= 6; ++order) {
      std::vector<int> idx(order);
      for (int t = 0; t < order; ++t)
        idx[t] = static_cast<int>(rng.uniform_index(d));
      const double exact = mvn::mu_derivative(x, mu, sigma, idx);
      const double h = kMuStep[order];
      const double approx =
          order >= 4 ? fd_mu_derivative_richardson(x, mu, sigma, idx, h)
                     : fd_mu_derivative(x, mu, sigma, idx, h);
      // absolute floor at the typical magnitude of this derivative order
      const double pmax = mvn::SpdChol(sigma).inverse().diagonal().maxCoeff();
      double order_scale = std::max(f, 1e-8);
      for (int t = 0; t < order; t += 2) order_scale *= (t + 1) * pmax;
      const double rel = std::abs(approx - exact) /
                         std::max(std::abs(exact), 0.05 * order_scale);
      rep.max_fd_rel = std::max(rep.max_fd_rel, rel);
      if (rel > tol_fd)
        rep.failures.push_back("fd order " + std::to_string(order) +
                               " rel " + std::to_string(rel));
    }

    // mu route vs covariance route, analytic on both sides
    {
      std::vector<std::pair<int, int>> p1 = {
          {static_cast<int>(rng.uniform_index(d)),
           static_cast<int>(rng.uniform_index(d))}};
      std::vector<std::pair<int, int>> p2 = p1;
      p2.push_back({static_cast<int>(rng.uniform_index(d)),
                    static_cast<int>(rng.uniform_index(d))});
      for (const auto& pairs : {p1, p2}) {
        const double mu_route = mvn::v_derivative(x, mu, sigma, pairs);
        const double cov_route = mvn::v_derivative_direct(x, mu, sigma, pairs);
        const double rel = std::abs(mu_route - cov_route) /
                           std::max(std::abs(cov_route), 1e-12);
        rep.max_identity_rel = std::max(rep.max_identity_rel, rel);
        if (rel > tol_identity)
          rep.failures.push_back("identity " + std::to_string(pairs.size()) +
                                 "-pair rel " + std::to_string(rel));
      }
    }

    // v route vs finite differences in the v coordinate (1..3 pairs)
    for (size_t npairs = 1; npairs <= 3; ++npairs) {
      std::vector<std::pair<int, int>> pairs;
      for (size_t t = 0; t < npairs; ++t)
        pairs.push_back({static_cast<int>(rng.uniform_index(d)),
                         static_cast<int>(rng.uniform_index(d))});
      const double exact = mvn::v_derivative(x, mu, sigma, pairs);
      const double step = npairs == 1 ? 1e-4 : (npairs == 2 ? 6e-3 : 1e-2);
      const double approx = fd_v_derivative(x, mu, sigma, pairs, step);
      const double rel = std::abs(approx - exact) /
                         std::max(std::abs(exact), 0.05 * std::max(f, 1e-8));
      rep.max_v_fd_rel = std::max(rep.max_v_fd_rel, rel);
      if (rel > tol_v_fd)
        rep.failures.push_back("v-fd " + std::to_string(npairs) + "-pair rel " +
                               std::to_string(rel));
    }
  }

  // reparameterized-density derivative structure, both variants
  for (int d : {1, 2}) {
    for (double alpha : {0.2, 0.3, 0.5, 0.7}) {
      MixtureParams theta;
      theta.alpha = Vec::Ones(1);
      Vec mu(d);
      for (int a = 0; a < d; ++a) mu[a] = 0.3 * a - 0.2;
      theta.mu = {mu};
      Rng srng = make_stream(seed, 1000 + d * 10 + static_cast<int>(alpha * 10));
      theta.sigma = {random_spd(d, srng)};
      for (auto variant :
           {asymptotics::Variant::kHetero, asymptotics::Variant::kHomo}) {
        auto vr = asymptotics::check_vanishing_scores(
            theta, alpha, variant, tol_vanishing, tol_lemma, seed + d);
        rep.max_vanishing_abs =
            std::max(rep.max_vanishing_abs, vr.max_vanishing_error);
        rep.max_lemma_rel = std::max(rep.max_lemma_rel, vr.max_identity_error);
        if (!vr.all_pass)
          for (const auto& chk : vr.checks)
            if (!chk.pass)
              rep.failures.push_back(
                  (variant == asymptotics::Variant::kHetero ? "hetero d="
                                                            : "homo d=") +
                  std::to_string(d) + " alpha=" + std::to_string(alpha) + " " +
                  chk.label + " err " + std::to_string(chk.error));
      }
    }
  }

  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace mixorder
