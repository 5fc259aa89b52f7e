#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mixorder/asymptotics.hpp"
#include "mixorder/mvn.hpp"
#include "mixorder/rng.hpp"

using namespace mixorder;
using namespace mixorder::asymptotics;

namespace {

MixtureParams std_normal(int d) {
  MixtureParams p;
  p.alpha = Vec::Ones(1);
  p.mu = {Vec::Zero(d)};
  p.sigma = {Mat::Identity(d, d)};
  return p;
}

double chi2_cdf_2(double x) { return 1.0 - std::exp(-0.5 * x); }

// exhaustive reference for the cone projection with I = identity: grid the
// block that enters the map nonlinearly, solve the linear block exactly.
double oracle_hetero_identity(const Vec& z, ConeSpec::Kind kind) {
  const int d = 2;
  const ConeSpec cone = ConeSpec::make(kind, d);
  const int n_grid = 61;
  const double lo = -3.0, hi = 3.0;
  const int outer_dim = kind == ConeSpec::Kind::kHeteroJ2 ? 2 : 3;
  const int inner_dim = kind == ConeSpec::Kind::kHeteroJ2 ? 3 : 2;

  double best = z.squaredNorm();  // lambda = 0
  std::vector<int> counter(outer_dim, 0);
  Vec lam = Vec::Zero(cone.lambda_dim());
  for (;;) {
    // outer block values from the lattice
    Vec outer(outer_dim);
    for (int a = 0; a < outer_dim; ++a)
      outer[a] = lo + (hi - lo) * counter[a] / (n_grid - 1);
    // assemble lambda = (lambda_mu, lambda_v)
    auto fill = [&](const Vec& inner) {
      if (kind == ConeSpec::Kind::kHeteroJ2) {
        lam.head(2) = outer;
        lam.tail(3) = inner;
      } else {
        lam.head(2) = inner;
        lam.tail(3) = outer;
      }
    };
    // the inner block enters the map linearly: least squares via columns
    fill(Vec::Zero(inner_dim));
    Vec base = cone.map(lam);
    Mat cols(base.size(), inner_dim);
    for (int j = 0; j < inner_dim; ++j) {
      Vec e = Vec::Zero(inner_dim);
      e[j] = 1.0;
      fill(e);
      cols.col(j) = cone.map(lam) - base;
    }
    Vec rhs = z - base;
    Vec inner =
        (cols.transpose() * cols + 1e-12 * Mat::Identity(inner_dim, inner_dim))
            .ldlt()
            .solve(cols.transpose() * rhs);
    fill(inner);
    best = std::min(best, (cone.map(lam) - z).squaredNorm());

    int a = 0;
    while (a < outer_dim && ++counter[a] == n_grid) counter[a++] = 0;
    if (a == outer_dim) break;
  }
  return best;
}

}  // namespace

TEST_CASE("multi-index enumeration sizes and order") {
  CHECK(index_triples(1).size() == 1);
  CHECK(index_quads(1).size() == 1);
  CHECK(index_triples(2).size() == 4);
  CHECK(index_quads(2).size() == 5);
  CHECK(index_triples(3).size() == 10);
  CHECK(index_quads(3).size() == 15);
  auto t2 = index_triples(2);
  CHECK(t2[0] == std::array<int, 3>{0, 0, 0});
  CHECK(t2[1] == std::array<int, 3>{0, 0, 1});
  CHECK(t2[2] == std::array<int, 3>{0, 1, 1});
  CHECK(t2[3] == std::array<int, 3>{1, 1, 1});
}

TEST_CASE("polynomial blocks match the displayed d=2 forms") {
  Vec lmu(2), lv(3);
  lmu << 1.3, -0.7;
  lv << 0.5, 2.0, -1.1;  // (v11, v12, v22)

  Vec muv = lambda_mu_v(lmu, lv);
  CHECK(muv[0] == doctest::Approx(lmu[0] * lv[0]));
  CHECK(muv[1] == doctest::Approx(lmu[0] * lv[1] + lmu[1] * lv[0]));
  CHECK(muv[2] == doctest::Approx(lmu[0] * lv[2] + lmu[1] * lv[1]));
  CHECK(muv[3] == doctest::Approx(lmu[1] * lv[2]));

  Vec v2 = lambda_v2(lv);
  CHECK(v2[0] == doctest::Approx(lv[0] * lv[0]));
  CHECK(v2[1] == doctest::Approx(2.0 * lv[0] * lv[1]));
  CHECK(v2[2] == doctest::Approx(2.0 * lv[0] * lv[2] + lv[1] * lv[1]));
  CHECK(v2[3] == doctest::Approx(2.0 * lv[1] * lv[2]));
  CHECK(v2[4] == doctest::Approx(lv[2] * lv[2]));

  Vec mu4 = lambda_mu4(lmu);
  CHECK(mu4[0] == doctest::Approx(std::pow(lmu[0], 4)));
  CHECK(mu4[1] == doctest::Approx(4.0 * std::pow(lmu[0], 3) * lmu[1]));
  CHECK(mu4[2] == doctest::Approx(6.0 * lmu[0] * lmu[0] * lmu[1] * lmu[1]));
  CHECK(mu4[3] == doctest::Approx(4.0 * lmu[0] * std::pow(lmu[1], 3)));
  CHECK(mu4[4] == doctest::Approx(std::pow(lmu[1], 4)));

  Vec mu3 = lambda_mu3(lmu);
  CHECK(mu3[0] == doctest::Approx(std::pow(lmu[0], 3)));
  CHECK(mu3[1] == doctest::Approx(3.0 * lmu[0] * lmu[0] * lmu[1]));
  CHECK(mu3[2] == doctest::Approx(3.0 * lmu[0] * lmu[1] * lmu[1]));
  CHECK(mu3[3] == doctest::Approx(std::pow(lmu[1], 3)));
}

TEST_CASE("reparameterization: null embedding, barycenter, round trip") {
  Rng rng = make_rng(7);
  for (int rep = 0; rep < 40; ++rep) {
    const int d = 1 + static_cast<int>(rng.uniform_index(3));
    const double alpha = 0.05 + 0.9 * rng.uniform();
    Vec nu_mu(d), lam_mu(d);
    Vec nu_v(tri_size(d)), lam_v(tri_size(d));
    for (int a = 0; a < d; ++a) {
      nu_mu[a] = rng.normal();
      lam_mu[a] = rng.normal();
    }
    for (int t = 0; t < nu_v.size(); ++t) {
      nu_v[t] = rng.normal();
      lam_v[t] = 0.5 * rng.normal();
    }
    HeteroComponents c = reparam_hetero(nu_mu, nu_v, lam_mu, lam_v, alpha);
    // barycentric identity
    CHECK((alpha * c.mu1 + (1.0 - alpha) * c.mu2 - nu_mu).cwiseAbs().maxCoeff() <=
          1e-12);
    HeteroReparam back =
        reparam_hetero_inverse(c.mu1, c.mu2, c.v1, c.v2, alpha);
    CHECK((back.lambda_mu - lam_mu).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.lambda_v - lam_v).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.nu_mu - nu_mu).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.nu_v - nu_v).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // lambda = 0 embeds the null point
  Vec nu_mu = Vec::Ones(2), nu_v(3);
  nu_v << 1.0, 0.2, 1.5;
  HeteroComponents c = reparam_hetero(nu_mu, nu_v, Vec::Zero(2), Vec::Zero(3),
                                      0.4);
  CHECK((c.mu1 - nu_mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c.mu2 - nu_mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c.v1 - nu_v).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c.v2 - nu_v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("score dimensions and the d=1 specialization") {
  MixtureParams p1 = std_normal(1);
  Vec x = Vec::Constant(1, 0.8);
  Vec s = hetero_scores(x, std::nullopt, p1);
  REQUIRE(s.size() == 2 + 1 + 1);  // (mu, v) eta block + third + fourth
  const double f = mvn::density(x, p1.mu[0], p1.sigma[0]);
  CHECK(s[2] == doctest::Approx(mvn::mu_derivative(x, p1.mu[0], p1.sigma[0],
                                                   {0, 0, 0}) /
                                (6.0 * f))
                    .epsilon(1e-12));
  CHECK(s[3] == doctest::Approx(mvn::mu_derivative(x, p1.mu[0], p1.sigma[0],
                                                   {0, 0, 0, 0}) /
                                (24.0 * f))
                    .epsilon(1e-12));

  MixtureParams p2 = std_normal(2);
  Vec x2(2);
  x2 << 0.3, -0.4;
  Vec s2 = hetero_scores(x2, std::nullopt, p2);
  CHECK(s2.size() == (2 + 3) + (4 + 5));
}

TEST_CASE("hetero scores have zero mean under the null") {
  MixtureParams truth;
  truth.alpha = Vec(2);
  truth.alpha << 0.4, 0.6;
  truth.mu = {Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  truth.sigma = {Mat::Identity(2, 2), 1.5 * Mat::Identity(2, 2)};
  ScoreEvaluator ev(truth, Variant::kHetero);
  Rng rng = make_rng(55);
  const int n = 100000;
  Dataset draws = sample(ev.theta(), n, rng);
  const int dim = ev.eta_dim() + ev.lambda_dim();
  Vec mean = Vec::Zero(dim), second = Vec::Zero(dim);
  for (int i = 0; i < n; ++i) {
    Vec s = ev.evaluate_stacked(draws.x.row(i).transpose());
    mean += s;
    second += s.cwiseProduct(s);
  }
  mean /= n;
  second /= n;
  for (int k = 0; k < dim; ++k) {
    const double se = std::sqrt((second[k] - mean[k] * mean[k]) / n);
    CHECK(std::abs(mean[k]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("homo alpha-score: zero mean, Taylor limit, odd symmetry") {
  MixtureParams p = std_normal(1);
  Vec tiny = Vec::Constant(1, 1e-3);
  Vec x = Vec::Constant(1, 0.6);
  Vec s = homo_scores(x, std::nullopt, p, {tiny});
  const double f = mvn::density(x, p.mu[0], p.sigma[0]);
  const double cubic =
      mvn::mu_derivative(x, p.mu[0], p.sigma[0], {0, 0, 0}) *
      std::pow(tiny[0], 3) / (6.0 * std::pow(std::abs(tiny[0]), 3) * f);
  const double s_alpha = s[s.size() - 1];
  CHECK(std::abs(s_alpha - cubic) <= 1e-3 * std::abs(cubic));

  // sign flip of the leading cubic term at small |lambda|
  Vec s_neg = homo_scores(x, std::nullopt, p, {Vec::Constant(1, -1e-3)});
  CHECK(s_neg[s_neg.size() - 1] ==
        doctest::Approx(-s_alpha).epsilon(1e-2));

  // zero mean by Monte Carlo at a moderate lambda
  ScoreEvaluator ev(p, Variant::kHomo, {Vec::Constant(1, 0.8)});
  Rng rng = make_rng(77);
  const int n = 100000;
  Dataset draws = sample(p, n, rng);
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec si = ev.evaluate_stacked(draws.x.row(i).transpose());
    const double v = si[si.size() - 1];
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / n;
  const double se = std::sqrt((acc2 / n - mean * mean) / n);
  CHECK(std::abs(mean) <= 4.0 * se);
}

TEST_CASE("information estimation: structure and stability") {
  MixtureParams p = std_normal(1);
  Rng rng = make_rng(3);
  ScoreSystem info = estimate_information(p, 20000, rng, Variant::kHetero);
  CHECK(info.i_eta.rows() == 2);
  Eigen::SelfAdjointEigenSolver<Mat> es_eta(info.i_eta);
  CHECK(es_eta.eigenvalues().minCoeff() > 0.0);

  Eigen::SelfAdjointEigenSolver<Mat> es(info.i_lambda_dot_eta);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);

  // doubling the Monte Carlo size drifts entries at the root-n rate
  Rng rng2 = make_rng(3);
  ScoreSystem info2 = estimate_information(p, 40000, rng2, Variant::kHetero);
  const double scale = info.i_lambda.cwiseAbs().maxCoeff();
  const double drift =
      (info2.i_lambda - info.i_lambda).cwiseAbs().maxCoeff() / scale;
  CHECK(drift < 5.0 / std::sqrt(20000.0));
}

TEST_CASE("independent information estimates agree within Monte Carlo error") {
  MixtureParams p = std_normal(2);
  Rng r1 = make_rng(101), r2 = make_rng(202);
  const int n_mc = 40000;
  ScoreSystem a = estimate_information(p, n_mc, r1, Variant::kHetero);
  ScoreSystem b = estimate_information(p, n_mc, r2, Variant::kHetero);
  const double scale = a.i_lambda_dot_eta.cwiseAbs().maxCoeff();
  const double gap =
      (a.i_lambda_dot_eta - b.i_lambda_dot_eta).cwiseAbs().maxCoeff();
  CHECK(gap / scale <= 6.0 / std::sqrt(static_cast<double>(n_mc)) * 2.0);
}

TEST_CASE("cone images are closed under positive scaling") {
  Rng rng = make_rng(21);
  for (auto kind :
       {ConeSpec::Kind::kHeteroJ1, ConeSpec::Kind::kHeteroJ2,
        ConeSpec::Kind::kHomoJ1, ConeSpec::Kind::kHomoJ2}) {
    for (int d : {1, 2}) {
      const ConeSpec cone = ConeSpec::make(kind, d);
      Vec lam(cone.lambda_dim());
      for (int a = 0; a < lam.size(); ++a) lam[a] = rng.normal();
      const Vec t = cone.map(lam);
      for (double c : {0.3, 2.0, 7.5}) {
        Vec lam_scaled = lam;
        switch (kind) {
          case ConeSpec::Kind::kHeteroJ1:
            lam_scaled.head(d) *= std::sqrt(c);
            lam_scaled.tail(tri_size(d)) *= std::sqrt(c);
            break;
          case ConeSpec::Kind::kHeteroJ2:
            lam_scaled.head(d) *= std::pow(c, 0.25);
            lam_scaled.tail(tri_size(d)) *= std::pow(c, 0.75);
            break;
          case ConeSpec::Kind::kHomoJ1:
            lam_scaled *= std::cbrt(c);
            break;
          case ConeSpec::Kind::kHomoJ2:
            lam_scaled.head(d) *= std::pow(c, 0.25);
            lam_scaled[d] *= std::pow(c, 0.25);
            break;
        }
        const Vec t_scaled = cone.map(lam_scaled);
        CHECK((t_scaled - c * t).cwiseAbs().maxCoeff() <=
              1e-9 * (1.0 + c * t.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("feasible points project onto themselves") {
  Rng rng = make_rng(5);
  for (auto kind : {ConeSpec::Kind::kHeteroJ1, ConeSpec::Kind::kHeteroJ2}) {
    for (int rep = 0; rep < 5; ++rep) {
      const ConeSpec cone = ConeSpec::make(kind, 2);
      Vec lam(cone.lambda_dim());
      for (int a = 0; a < lam.size(); ++a) lam[a] = 0.8 * rng.normal();
      const Vec z = cone.map(lam);
      Mat info = Mat::Identity(z.size(), z.size());
      ConeProjection proj = cone_project(z, info, cone, 24, rng);
      CHECK(proj.r_min <= 1e-8 * std::max(z.squaredNorm(), 1e-8));
      CHECK(proj.v >= 0.0);
      CHECK(proj.v <= z.dot(info * z) + 1e-12);
    }
  }
}

TEST_CASE("d=1 heteroscedastic cones cover the plane") {
  Rng rng = make_rng(31);
  const ConeSpec c1 = ConeSpec::make(ConeSpec::Kind::kHeteroJ1, 1);
  const ConeSpec c2 = ConeSpec::make(ConeSpec::Kind::kHeteroJ2, 1);
  Mat info = Mat::Identity(2, 2);
  for (int rep = 0; rep < 25; ++rep) {
    Vec z(2);
    z << 2.0 * rng.normal(), 2.0 * rng.normal();
    const double r1 = cone_project(z, info, c1, 24, rng).r_min;
    const double r2 = cone_project(z, info, c2, 24, rng).r_min;
    CHECK(std::min(r1, r2) <= 1e-6 * std::max(z.squaredNorm(), 1e-6));
  }
}

TEST_CASE("projection beats random feasible points") {
  Rng rng = make_rng(77);
  const ConeSpec cone = ConeSpec::make(ConeSpec::Kind::kHeteroJ2, 2);
  Vec z(cone.out_dim());
  for (int a = 0; a < z.size(); ++a) z[a] = rng.normal();
  Mat a_mat(z.size(), z.size());
  for (int i = 0; i < z.size(); ++i)
    for (int j = 0; j < z.size(); ++j) a_mat(i, j) = 0.3 * rng.normal();
  Mat info = a_mat * a_mat.transpose() +
             Mat::Identity(z.size(), z.size());
  ConeProjection proj = cone_project(z, info, cone, 32, rng);
  for (int rep = 0; rep < 100; ++rep) {
    Vec lam(cone.lambda_dim());
    for (int a = 0; a < lam.size(); ++a) lam[a] = rng.normal();
    const Vec t = cone.map(lam);
    const double r = (t - z).dot(info * (t - z));
    CHECK(proj.r_min <= r + 1e-9);
  }
}

TEST_CASE("optimizer matches the exhaustive reference on d=2 instances") {
  Rng rng = make_rng(99);
  for (int rep = 0; rep < 5; ++rep) {
    Vec z(9);
    for (int a = 0; a < 9; ++a) z[a] = 1.2 * rng.normal();
    for (auto kind : {ConeSpec::Kind::kHeteroJ1, ConeSpec::Kind::kHeteroJ2}) {
      const ConeSpec cone = ConeSpec::make(kind, 2);
      Mat info = Mat::Identity(9, 9);
      ConeProjection proj = cone_project(z, info, cone, 32, rng);
      const double reference = oracle_hetero_identity(z, kind);
      CHECK(proj.r_min <= reference + 1e-3);
    }
  }
}

TEST_CASE("d=1 heteroscedastic limit is chi-squared with 2 dof (smoke)") {
  MixtureParams p = std_normal(1);
  Rng rng = make_rng(4);
  ScoreSystem info = estimate_information(p, 30000, rng, Variant::kHetero);
  Rng draw_rng = make_rng(5);
  LimitDistribution dist = simulate_limit_hetero(info, 3000, draw_rng, 2, 24);
  REQUIRE(dist.samples.size() >= 2990);
  CHECK(dist.samples.front() >= 0.0);
  double ks = 0.0;
  const double n = static_cast<double>(dist.samples.size());
  for (size_t i = 0; i < dist.samples.size(); ++i) {
    const double f = chi2_cdf_2(dist.samples[i]);
    ks = std::max(ks, std::abs(f - (i + 1) / n));
    ks = std::max(ks, std::abs(f - i / n));
  }
  CHECK(ks < 0.05);
}

TEST_CASE("more components stochastically dominate fewer") {
  // synthetic score systems with identical independent blocks
  ScoreSystem one;
  one.variant = Variant::kHetero;
  one.d = 1;
  one.M0 = 1;
  one.block = 2;
  one.i_lambda_dot_eta = Mat::Identity(2, 2);
  one.sim_cov = one.i_lambda_dot_eta;
  one.i_lambda = one.i_lambda_dot_eta;
  one.i_lambda_eta = Mat::Zero(2, 2);
  one.i_eta = Mat::Identity(2, 2);

  ScoreSystem two = one;
  two.M0 = 2;
  two.i_lambda_dot_eta = Mat::Identity(4, 4);
  two.sim_cov = two.i_lambda_dot_eta;
  two.i_lambda = two.i_lambda_dot_eta;
  two.i_lambda_eta = Mat::Zero(4, 2);

  Rng r1 = make_rng(11), r2 = make_rng(11);
  LimitDistribution d1 = simulate_limit_hetero(one, 2000, r1, 2, 16);
  LimitDistribution d2 = simulate_limit_hetero(two, 2000, r2, 2, 16);
  for (double level : {0.5, 0.8, 0.9, 0.95})
    CHECK(d2.quantile(level) >= d1.quantile(level) - 0.05);
}

TEST_CASE("homoscedastic limit simulation: nonnegative, stable under grid refinement") {
  MixtureParams p = std_normal(1);
  p.homoscedastic = true;
  auto radii_grid = [&](int count) {
    std::vector<Vec> grid;
    for (int i = 1; i <= count; ++i) {
      const double r = 0.25 + 1.75 * (i - 1) / std::max(count - 1, 1);
      grid.push_back(Vec::Constant(1, r));
      grid.push_back(Vec::Constant(1, -r));
    }
    return grid;
  };
  Rng rng1 = make_rng(6);
  ScoreSystem coarse =
      estimate_information(p, 30000, rng1, Variant::kHomo, radii_grid(10));
  Rng rng2 = make_rng(6);
  ScoreSystem fine =
      estimate_information(p, 30000, rng2, Variant::kHomo, radii_grid(20));
  Rng d1 = make_rng(8), d2 = make_rng(8);
  LimitDistribution lc = simulate_limit_homo(coarse, 3000, d1, 2, 16);
  LimitDistribution lf = simulate_limit_homo(fine, 3000, d2, 2, 16);
  CHECK(lc.samples.front() >= 0.0);
  CHECK(lf.samples.front() >= 0.0);
  const double qc = lc.quantile(0.95), qf = lf.quantile(0.95);
  CHECK(std::abs(qf - qc) <= 0.02 * std::max(qc, qf) + 0.05);
}

TEST_CASE("vanishing-score reports") {
  MixtureParams p = std_normal(1);
  VanishingReport het = check_vanishing_scores(p, 0.3, Variant::kHetero);
  CHECK(het.all_pass);
  CHECK(het.max_vanishing_error <= 1e-6);

  // b(0.3) = -(2/3)(0.09 - 0.3 + 1)
  const double b03 = -(2.0 / 3.0) * (0.09 - 0.3 + 1.0);
  CHECK(b03 == doctest::Approx(-0.5266666666666666).epsilon(1e-12));
  bool saw_d4 = false;
  for (const auto& c : het.checks)
    if (c.label.find("d4_lmu") != std::string::npos && !c.vanishing) {
      saw_d4 = true;
      CHECK(c.error <= 1e-3);
    }
  CHECK(saw_d4);

  // homoscedastic at alpha = 1/2: the third derivative factor vanishes
  VanishingReport homo_half = check_vanishing_scores(p, 0.5, Variant::kHomo);
  CHECK(homo_half.all_pass);
  bool saw_d3_vanishing = false;
  for (const auto& c : homo_half.checks)
    if (c.label.find("d3") != std::string::npos && c.vanishing) {
      saw_d3_vanishing = true;
      CHECK(c.error <= 1e-6);
    }
  CHECK(saw_d3_vanishing);

  MixtureParams p2 = std_normal(2);
  CHECK(check_vanishing_scores(p2, 0.35, Variant::kHetero).all_pass);
  CHECK(check_vanishing_scores(p2, 0.5, Variant::kHomo).all_pass);
}

TEST_CASE("limit quantiles are monotone in the level and deterministic") {
  MixtureParams p = std_normal(1);
  Rng rng = make_rng(14);
  ScoreSystem info = estimate_information(p, 20000, rng, Variant::kHetero);
  Rng da = make_rng(9), db = make_rng(9);
  LimitDistribution la = simulate_limit_hetero(info, 1500, da, 1, 16);
  LimitDistribution lb = simulate_limit_hetero(info, 1500, db, 2, 16);
  REQUIRE(la.samples.size() == lb.samples.size());
  for (size_t i = 0; i < la.samples.size(); ++i)
    CHECK(la.samples[i] == lb.samples[i]);  // jobs do not change the draw set
  double prev = 0.0;
  for (double level : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    const double q = la.quantile(level);
    CHECK(q >= prev);
    prev = q;
  }
}
