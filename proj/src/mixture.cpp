#include "mixorder/mixture.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mixorder/kernels.hpp"
#include "mixorder/mvn.hpp"

namespace mixorder {

namespace {
constexpr double kAlphaFloor = 1e-12;
}

void MixtureParams::validate() const {
  const int m = components();
  if (m < 1) throw ArgumentError("mixture needs at least one component");
  if (alpha.size() != m) throw ArgumentError("alpha length must equal M");
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    if (!(alpha[j] >= 0.0)) throw ArgumentError("mixing weights must be nonnegative");
    total += alpha[j];
  }
  if (std::abs(total - 1.0) > 1e-12 * m)
    throw ArgumentError("mixing weights must sum to one");
  const int d = dim();
  const size_t nsigma = homoscedastic ? 1 : static_cast<size_t>(m);
  if (sigma.size() != nsigma)
    throw ArgumentError("sigma count inconsistent with homoscedastic flag");
  for (const Vec& m_j : mu) {
    if (m_j.size() != d) throw ArgumentError("component mean dimension mismatch");
    if (!m_j.allFinite()) throw ArgumentError("component mean must be finite");
  }
  for (const Mat& s : sigma) {
    if (s.rows() != d || s.cols() != d)
      throw ArgumentError("covariance dimension mismatch");
    mvn::check_symmetric(s);
    mvn::SpdChol check(s);  // throws if not SPD
  }
  if (gamma && gamma->rows() != d) throw ArgumentError("gamma must be d x p");
}

void Dataset::validate() const {
  if (n() < 1) throw ArgumentError("dataset must contain at least one row");
  if (!x.allFinite()) throw DataError("dataset x contains non-finite entries");
  if (z) {
    if (z->rows() != x.rows()) throw ArgumentError("z row count mismatch");
    if (!z->allFinite()) throw DataError("dataset z contains non-finite entries");
  }
}

double mixture_log_density(const MixtureParams& params, const Vec& x,
                           const std::optional<Vec>& z) {
  const int m = params.components();
  if (static_cast<bool>(z) != static_cast<bool>(params.gamma))
    throw ArgumentError("covariates present in exactly one of params and point");
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(m);
  for (int j = 0; j < m; ++j) {
    logs[j] = std::log(std::max(params.alpha[j], kAlphaFloor)) +
              mvn::log_density(x, z, params.gamma, params.mu[j], params.sigma_of(j));
    best = std::max(best, logs[j]);
  }
  if (!std::isfinite(best)) throw NumericError("zero mixture density at point");
  double s = 0.0;
  for (int j = 0; j < m; ++j) s += std::exp(logs[j] - best);
  return best + std::log(s);
}

double mixture_density(const MixtureParams& params, const Vec& x,
                       const std::optional<Vec>& z) {
  return std::exp(mixture_log_density(params, x, z));
}

double log_likelihood(const MixtureParams& params, const Dataset& data) {
  params.validate();
  if (data.dim() != params.dim())
    throw ArgumentError("data dimension does not match mixture");
  if (static_cast<bool>(data.z) != static_cast<bool>(params.gamma))
    throw ArgumentError("covariates present in exactly one of params and data");

  const auto& ops = kernels::active_ops();
  const int n = data.n();
  const int d = data.dim();
  const int m = params.components();

  RowMat xa = data.x;
  if (params.gamma) xa.noalias() -= (*data.z) * params.gamma->transpose();

  std::vector<double> logw(static_cast<size_t>(n) * m);
  for (int j = 0; j < m; ++j) {
    mvn::SpdChol chol(params.sigma_of(j));
    const Mat prec = chol.inverse();
    RowMat prec_row = prec;
    const double lognorm = -0.5 * (d * kLog2Pi + chol.log_det()) +
                           std::log(std::max(params.alpha[j], kAlphaFloor));
    ops.logdensity(xa.data(), n, d, params.mu[j].data(), prec_row.data(),
                   lognorm, logw.data() + j, m);
  }

  double ll = 0.0;
  std::vector<double> shifted(static_cast<size_t>(n) * m);
  std::vector<double> row_max(n);
  for (int i = 0; i < n; ++i) {
    const double* row = logw.data() + static_cast<size_t>(i) * m;
    double mx = row[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    if (!std::isfinite(mx))
      throw NumericError("zero mixture density at observation " + std::to_string(i));
    row_max[i] = mx;
    double* out = shifted.data() + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) out[j] = row[j] - mx;
  }
  ops.exp_inplace(shifted.data(), shifted.size());
  for (int i = 0; i < n; ++i) {
    const double* row = shifted.data() + static_cast<size_t>(i) * m;
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += row[j];
    ll += row_max[i] + std::log(s);
  }
  return ll;
}

double variance_penalty(const Mat& sigma, const Mat& omega, double a_n) {
  const int d = static_cast<int>(sigma.rows());
  if (omega.rows() != d || omega.cols() != d)
    throw ArgumentError("penalty anchor dimension mismatch");
  mvn::SpdChol chol_sigma(sigma);
  mvn::SpdChol chol_omega(omega);
  const Mat prec = chol_sigma.inverse();
  const double tr = (omega * prec).trace();
  const double logdet_ratio = chol_omega.log_det() - chol_sigma.log_det();
  return -a_n * (tr - logdet_ratio - d);
}

double penalty_total(const MixtureParams& params, const PenaltySpec& penalty) {
  if (penalty.a_n == 0.0) return 0.0;
  const int m = params.components();
  if (penalty.anchors.size() != 1 &&
      penalty.anchors.size() != static_cast<size_t>(m))
    throw ArgumentError("penalty anchors must number 1 or M");
  double total = 0.0;
  if (params.homoscedastic) {
    // shared covariance penalized once per component against its anchor
    for (int j = 0; j < m; ++j)
      total += variance_penalty(params.sigma[0], penalty.anchor(j), penalty.a_n);
  } else {
    for (int j = 0; j < m; ++j)
      total += variance_penalty(params.sigma[j], penalty.anchor(j), penalty.a_n);
  }
  return total;
}

double tau_penalty(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("tau must lie in (0,1)");
  return std::log(2.0 * std::min(tau, 1.0 - tau));
}

MixtureParams canonicalize(const MixtureParams& params) {
  const int m = params.components();
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  auto key_less = [&](int a, int b) {
    const Vec& ma = params.mu[a];
    const Vec& mb = params.mu[b];
    for (int i = 0; i < ma.size(); ++i) {
      if (ma[i] < mb[i]) return true;
      if (ma[i] > mb[i]) return false;
    }
    if (!params.homoscedastic) {
      const Mat& sa = params.sigma[a];
      const Mat& sb = params.sigma[b];
      for (int i = 0; i < sa.size(); ++i) {
        if (sa.data()[i] < sb.data()[i]) return true;
        if (sa.data()[i] > sb.data()[i]) return false;
      }
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), key_less);

  MixtureParams out = params;
  for (int j = 0; j < m; ++j) {
    out.alpha[j] = params.alpha[order[j]];
    out.mu[j] = params.mu[order[j]];
    if (!params.homoscedastic) out.sigma[j] = params.sigma[order[j]];
  }
  return out;
}

Dataset sample(const MixtureParams& params, int n, Rng& rng,
               const std::optional<RowMat>& z_rows) {
  params.validate();
  if (n < 1) throw ArgumentError("sample size must be positive");
  if (params.gamma && !z_rows)
    throw ArgumentError("z rows required when gamma is present");
  if (z_rows && z_rows->rows() != n)
    throw ArgumentError("z rows must match requested sample size");

  const int m = params.components();
  const int d = params.dim();
  std::vector<Mat> chol(params.sigma.size());
  for (size_t j = 0; j < params.sigma.size(); ++j)
    chol[j] = mvn::SpdChol(params.sigma[j]).chol_lower();

  Dataset out;
  out.x.resize(n, d);
  if (z_rows) out.z = *z_rows;
  Vec xi(d);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int label = m - 1;
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      acc += params.alpha[j];
      if (u < acc) {
        label = j;
        break;
      }
    }
    for (int a = 0; a < d; ++a) xi[a] = rng.normal();
    const Mat& l = chol[params.homoscedastic ? 0 : label];
    Vec row = params.mu[label] + l * xi;
    if (params.gamma) row += (*params.gamma) * z_rows->row(i).transpose();
    out.x.row(i) = row.transpose();
  }
  return out;
}

InformationCriteria information_criteria_from_loglik(const MixtureParams& params,
                                                     double loglik, int n) {
  const int m = params.components();
  const int d = params.dim();
  const int p = params.covariate_dim();
  const int cov_blocks = params.homoscedastic ? 1 : m;
  const int k = (m - 1) + d * p + m * d + cov_blocks * tri_size(d);
  InformationCriteria ic;
  ic.k = k;
  ic.aic = 2.0 * k - 2.0 * loglik;
  ic.bic = k * std::log(static_cast<double>(n)) - 2.0 * loglik;
  return ic;
}

InformationCriteria information_criteria(const MixtureParams& params,
                                         const Dataset& data) {
  return information_criteria_from_loglik(params, log_likelihood(params, data),
                                          data.n());
}

namespace {

double parse_double(const std::string& tok, int line_no) {
  double value;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t' ||
                           *(last - 1) == '\r'))
    --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw DataError("CSV parse error at line " + std::to_string(line_no) +
                    ": bad number '" + tok + "'");
  return value;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, int x_cols) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw DataError("'" + path + "' is empty (header row expected)");

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  int ncol = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(parse_double(tok, line_no));
    if (ncol < 0) ncol = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != ncol)
      throw DataError("CSV parse error at line " + std::to_string(line_no) +
                      ": expected " + std::to_string(ncol) + " columns");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("'" + path + "' has no data rows");
  if (x_cols < 1 || x_cols > ncol)
    throw ArgumentError("declared x column count out of range for '" + path + "'");

  Dataset data;
  const int n = static_cast<int>(rows.size());
  data.x.resize(n, x_cols);
  const int p = ncol - x_cols;
  if (p > 0) data.z = RowMat(n, p);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < x_cols; ++a) data.x(i, a) = rows[i][a];
    for (int a = 0; a < p; ++a) (*data.z)(i, a) = rows[i][x_cols + a];
  }
  data.validate();
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.precision(17);
  for (int a = 0; a < data.dim(); ++a) {
    if (a) out << ',';
    out << 'x' << (a + 1);
  }
  for (int a = 0; a < data.covariate_dim(); ++a) out << ",z" << (a + 1);
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int a = 0; a < data.dim(); ++a) {
      if (a) out << ',';
      out << data.x(i, a);
    }
    for (int a = 0; a < data.covariate_dim(); ++a) out << ',' << (*data.z)(i, a);
    out << '\n';
  }
}

}  // namespace mixorder
