#include "mixorder/mvn.hpp"

#include <cmath>
#include <cstdint>

namespace mixorder::mvn {

SpdChol::SpdChol(const Mat& sigma) {
  const int d = static_cast<int>(sigma.rows());
  if (d == 0 || sigma.cols() != d) throw ArgumentError("covariance must be square");
  Eigen::LLT<Mat> llt(sigma.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success)
    throw DomainError("covariance is not positive definite");
  l_ = llt.matrixL();
  const double pivot_floor = 1e-12 * sigma.trace() / d;
  log_det_ = 0.0;
  for (int i = 0; i < d; ++i) {
    const double pivot = l_(i, i) * l_(i, i);
    if (!(pivot > pivot_floor))
      throw DomainError("covariance is numerically singular");
    log_det_ += std::log(pivot);
  }
}

Mat SpdChol::inverse() const {
  const int d = dim();
  Mat linv = l_.triangularView<Eigen::Lower>().solve(Mat::Identity(d, d));
  return linv.transpose() * linv;
}

Vec SpdChol::solve(const Vec& b) const {
  Vec y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double SpdChol::quad_form(const Vec& r) const {
  Vec y = l_.triangularView<Eigen::Lower>().solve(r);
  return y.squaredNorm();
}

void check_symmetric(const Mat& sigma, double rel_tol) {
  if (sigma.rows() != sigma.cols())
    throw ArgumentError("matrix must be square");
  const double scale = sigma.cwiseAbs().maxCoeff();
  const double gap = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (gap > rel_tol * std::max(scale, 1.0))
    throw ArgumentError("matrix is not symmetric");
}

double log_density(const Vec& x, const Vec& mu, const Mat& sigma) {
  const int d = static_cast<int>(x.size());
  if (mu.size() != d || sigma.rows() != d)
    throw ArgumentError("dimension mismatch in normal density");
  SpdChol chol(sigma);
  const Vec r = x - mu;
  return -0.5 * (d * kLog2Pi + chol.log_det() + chol.quad_form(r));
}

double log_density(const Vec& x, const std::optional<Vec>& z,
                   const std::optional<Mat>& gamma, const Vec& mu,
                   const Mat& sigma) {
  if (gamma.has_value() != z.has_value())
    throw ArgumentError("covariate z and coefficient gamma must come together");
  if (!gamma) return log_density(x, mu, sigma);
  if (gamma->rows() != x.size() || gamma->cols() != z->size())
    throw ArgumentError("gamma must be d x p");
  Vec shifted_mean = mu + (*gamma) * (*z);
  return log_density(x, shifted_mean, sigma);
}

double density(const Vec& x, const Vec& mu, const Mat& sigma) {
  return std::exp(log_density(x, mu, sigma));
}

double density(const Vec& x, const std::optional<Vec>& z,
               const std::optional<Mat>& gamma, const Vec& mu,
               const Mat& sigma) {
  return std::exp(log_density(x, z, gamma, mu, sigma));
}

Vec w_of_sigma(const Mat& sigma) {
  check_symmetric(sigma);
  const int d = static_cast<int>(sigma.rows());
  Vec v(tri_size(d));
  int t = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      v[t++] = (i == j) ? sigma(i, i) : 2.0 * sigma(i, j);
  return v;
}

Mat sigma_of_v(const Vec& v) {
  const int d = tri_dim(static_cast<int>(v.size()));
  if (d < 1) throw ArgumentError("v length is not a triangular number");
  Mat s(d, d);
  int t = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      s(i, j) = (i == j) ? v[t] : v[t] / 2.0;
      s(j, i) = s(i, j);
      ++t;
    }
  return s;
}

namespace {

struct Matching {
  std::vector<std::pair<std::int8_t, std::int8_t>> pairs;
  std::vector<std::int8_t> singles;
};

void enumerate_matchings(std::vector<int>& rest, Matching& cur,
                         std::vector<Matching>& out) {
  if (rest.empty()) {
    out.push_back(cur);
    return;
  }
  const int e = rest.front();
  std::vector<int> tail(rest.begin() + 1, rest.end());
  cur.singles.push_back(static_cast<std::int8_t>(e));
  enumerate_matchings(tail, cur, out);
  cur.singles.pop_back();
  for (std::size_t k = 0; k < tail.size(); ++k) {
    std::vector<int> rest2;
    for (std::size_t m = 0; m < tail.size(); ++m)
      if (m != k) rest2.push_back(tail[m]);
    cur.pairs.emplace_back(static_cast<std::int8_t>(e),
                           static_cast<std::int8_t>(tail[k]));
    enumerate_matchings(rest2, cur, out);
    cur.pairs.pop_back();
  }
}

// matchings of {0..order-1} into pairs and singletons, cached per order
const std::vector<Matching>& matchings(int order) {
  static const auto* tables = [] {
    auto* t = new std::vector<std::vector<Matching>>(7);
    for (int n = 1; n <= 6; ++n) {
      std::vector<int> elems(n);
      for (int i = 0; i < n; ++i) elems[i] = i;
      Matching cur;
      enumerate_matchings(elems, cur, (*t)[n]);
    }
    return t;
  }();
  return (*tables)[order];
}

}  // namespace

double mu_derivative(const Vec& x, const Vec& mu, const Mat& sigma,
                     const std::vector<int>& idx) {
  const int order = static_cast<int>(idx.size());
  if (order < 1 || order > 6)
    throw ArgumentError("mu_derivative supports orders 1 through 6");
  const int d = static_cast<int>(x.size());
  for (int t : idx)
    if (t < 0 || t >= d) throw ArgumentError("derivative index out of range");

  SpdChol chol(sigma);
  const Mat prec = chol.inverse();
  const Vec y = chol.solve(x - mu);
  const double f = std::exp(-0.5 * (d * kLog2Pi + chol.log_det() +
                                    (x - mu).dot(y)));

  double acc = 0.0;
  for (const Matching& m : matchings(order)) {
    double term = (m.pairs.size() % 2 == 0) ? 1.0 : -1.0;
    for (const auto& [a, b] : m.pairs) term *= prec(idx[a], idx[b]);
    for (std::int8_t c : m.singles) term *= y[idx[c]];
    acc += term;
  }
  return acc * f;
}

double v_derivative_direct(const Vec& x, const Vec& mu, const Mat& sigma,
                           const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty() || pairs.size() > 2)
    throw ArgumentError("direct covariance route supports 1 or 2 pairs");
  const int d = static_cast<int>(x.size());
  SpdChol chol(sigma);
  const Mat p = chol.inverse();
  const Vec y = chol.solve(x - mu);
  const double f =
      std::exp(-0.5 * (d * kLog2Pi + chol.log_det() + (x - mu).dot(y)));
  const auto [a, b] = pairs[0];
  if (pairs.size() == 1) return 0.5 * (y[a] * y[b] - p(a, b)) * f;
  const auto [c, e] = pairs[1];
  const double term1 = p(c, a) * p(b, e) + p(c, b) * p(a, e);
  const double term2 = (p(c, a) * y[e] + y[c] * p(a, e)) * y[b] +
                       y[a] * (p(c, b) * y[e] + y[c] * p(b, e));
  const double term3 = (y[a] * y[b] - p(a, b)) * (y[c] * y[e] - p(c, e));
  return 0.25 * (term1 - term2 + term3) * f;
}

double v_derivative(const Vec& x, const Vec& mu, const Mat& sigma,
                    const std::vector<std::pair<int, int>>& pairs,
                    const std::vector<int>& mixed_mu) {
  std::vector<int> idx;
  idx.reserve(2 * pairs.size() + mixed_mu.size());
  for (const auto& [a, b] : pairs) {
    idx.push_back(a);
    idx.push_back(b);
  }
  idx.insert(idx.end(), mixed_mu.begin(), mixed_mu.end());
  const double scale = std::pow(0.5, static_cast<double>(pairs.size()));
  return scale * mu_derivative(x, mu, sigma, idx);
}

}  // namespace mixorder::mvn
