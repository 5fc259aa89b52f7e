// mixorder: likelihood-based order tests for multivariate normal mixtures.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixorder/bootstrap.hpp"
#include "mixorder/derivcheck.hpp"
#include "mixorder/harness.hpp"
#include "mixorder/parallel.hpp"
#include "mixorder/preprocess.hpp"

namespace {

using namespace mixorder;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw ArgumentError("empty numeric list '" + csv + "'");
  return out;
}

void apply_an_rule(EMTestConfig& cfg, const std::string& an) {
  if (an == "one") {
    cfg.a_n = 1.0;
  } else if (an == "sqrt") {
    cfg.a_n = -1.0;  // resolved to n^{-1/2} once n is known
  } else {
    cfg.a_n = std::stod(an);
    if (cfg.a_n < 0) throw ArgumentError("a_n must be nonnegative");
  }
}

void resolve_an(EMTestConfig& cfg, int n) {
  if (cfg.a_n < 0) cfg.a_n = 1.0 / std::sqrt(static_cast<double>(n));
}

// Flat key=value config file with a mandatory schema_version=1 line; entries
// become long options of the subcommand, placed before the command-line flags
// so explicit flags win.
std::vector<std::string> load_config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::vector<std::string> tokens;
  bool versioned = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(line_no) +
                      ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "schema_version") {
      if (value != "1")
        throw DataError("unsupported config schema_version '" + value + "'");
      versioned = true;
      continue;
    }
    tokens.push_back("--" + key + "=" + value);
  }
  if (!versioned)
    throw DataError("config '" + path + "' is missing schema_version = 1");
  return tokens;
}

std::vector<std::string> preprocess_argv(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (size_t i = 0; i < args.size(); ++i) {
    std::string path;
    size_t erase_count = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      erase_count = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      erase_count = 1;
    }
    if (erase_count == 0) continue;
    std::vector<std::string> tokens = load_config_tokens(path);
    args.erase(args.begin() + i, args.begin() + i + erase_count);
    args.insert(args.begin() + i, tokens.begin(), tokens.end());
    break;
  }
  return args;
}

struct CommonOpts {
  std::uint64_t seed = 1;
  int jobs = default_jobs();
  int starts = 8;
  int max_iter = 2000;
  double rel_tol = 1e-8;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "root RNG seed");
  cmd->add_option("--jobs", o.jobs, "worker threads (env MIXORDER_JOBS)");
  cmd->add_option("--starts", o.starts, "EM multistart count");
  cmd->add_option("--max-iter", o.max_iter, "EM iteration cap");
  cmd->add_option("--rel-tol", o.rel_tol, "EM convergence tolerance");
}

EMTestConfig make_test_config(const CommonOpts& o, const std::string& tau_set,
                              int K, const std::string& an) {
  EMTestConfig cfg;
  cfg.tau_set = parse_double_list(tau_set);
  cfg.K = K;
  cfg.em.seed = o.seed;
  cfg.em.n_starts = o.starts;
  cfg.em.max_iter = o.max_iter;
  cfg.em.rel_tol = o.rel_tol;
  apply_an_rule(cfg, an);
  return cfg;
}

int cmd_test(const std::string& data_path, int dim, int mmax,
             const std::string& stat_name, int B, int K,
             const std::string& tau_set, const std::string& an, double eps1,
             double alpha, const CommonOpts& o, const std::string& out_path,
             const std::string& assign_path) {
  Dataset data = read_dataset_csv(data_path, dim);
  StatisticKind kind = statistic_from_name(stat_name);
  EMTestConfig cfg = make_test_config(o, tau_set, K, an);
  resolve_an(cfg, data.n());

  struct Row {
    int m0;
    std::vector<double> p_by_k;
    double aic, bic;
    bool reject;
  };
  std::vector<Row> rows;
  MixtureParams selected;
  bool have_selected = false;

  for (int m0 = 1; m0 <= mmax; ++m0) {
    BootstrapResult b =
        bootstrap_test(data, m0, kind, B, cfg, o.seed, eps1, o.jobs);
    InformationCriteria ic = information_criteria_from_loglik(
        b.null_fit.params, b.null_fit.loglik, data.n());
    Row row;
    row.m0 = m0;
    row.p_by_k = b.p_value_by_k.empty() ? std::vector<double>{b.p_value}
                                        : b.p_value_by_k;
    row.aic = ic.aic;
    row.bic = ic.bic;
    row.reject = b.p_value <= alpha;
    rows.push_back(row);
    std::printf("M0=%d  ", m0);
    for (size_t k = 0; k < row.p_by_k.size(); ++k)
      std::printf("p(K=%zu)=%.3f  ", k + 1, row.p_by_k[k]);
    std::printf("AIC=%.1f  BIC=%.1f  %s\n", ic.aic, ic.bic,
                row.reject ? "reject" : "fail to reject");
    if (!row.reject) {
      selected = b.null_fit.params;
      have_selected = true;
      break;
    }
  }
  if (!have_selected) {
    std::printf("reached --mmax=%d with all orders rejected\n", mmax);
    EMConfig ec;
    ec.seed = o.seed;
    ec.n_starts = o.starts;
    ec.max_iter = o.max_iter;
    ec.rel_tol = o.rel_tol;
    selected = fit_pmle(data, mmax, ec).params;
  }

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write '" + out_path + "'");
    out << "m0,K,p_value,aic,bic,reject\n";
    out.precision(10);
    for (const Row& r : rows)
      for (size_t k = 0; k < r.p_by_k.size(); ++k)
        out << r.m0 << ',' << (k + 1) << ',' << r.p_by_k[k] << ',' << r.aic
            << ',' << r.bic << ',' << (r.reject ? 1 : 0) << '\n';
  }
  if (!assign_path.empty()) {
    Mat w = e_step(selected, data);
    std::ofstream out(assign_path);
    if (!out) throw DataError("cannot write '" + assign_path + "'");
    out << "row,cluster\n";
    for (int i = 0; i < w.rows(); ++i) {
      int best = 0;
      for (int j = 1; j < w.cols(); ++j)
        if (w(i, j) > w(i, best)) best = j;
      out << i << ',' << best << '\n';
    }
  }
  return 0;
}

int cmd_simulate(const std::string& design, const std::string& stat_name,
                 int n, int reps, int B, int K, const std::string& tau_set,
                 const std::string& an, double eps1, const std::string& levels,
                 const CommonOpts& o, const std::string& out_path) {
  SimulationConfig cfg;
  cfg.design = design;
  cfg.stat = statistic_from_name(stat_name);
  cfg.n = n;
  cfg.reps = reps;
  cfg.B = B;
  cfg.test = make_test_config(o, tau_set, K, an);
  resolve_an(cfg.test, n);
  cfg.a_n_label = an;
  cfg.epsilon1 = eps1;
  cfg.levels = parse_double_list(levels);
  cfg.seed = o.seed;
  cfg.jobs = o.jobs;

  SimulationResult result = run_size_power(cfg);
  std::printf("%s\n", simulation_csv_header().c_str());
  for (const SimulationCell& c : result.cells)
    std::printf("%s,%s,%d,%s,%g,%d,%.6f,%.6f,%d,%d,%llu\n", design.c_str(),
                stat_name.c_str(), n, an.c_str(), c.level, c.k, c.reject_rate,
                c.mc_se, reps, B, static_cast<unsigned long long>(o.seed));
  if (reps > 0)
    std::printf("# %.2f s elapsed, %.3f s per replication\n",
                result.elapsed_seconds, result.seconds_per_rep());
  if (!out_path.empty()) write_simulation_csv(out_path, result);
  return 0;
}

int cmd_limit(const std::string& variant_name, const std::string& design,
              const std::string& data_path, int dim, int m0, int draws,
              int nmc, const std::string& levels_str, const CommonOpts& o,
              const std::string& out_path, int grid_directions, int overlay_B,
              const std::string& stat_name, int K, const std::string& tau_set,
              const std::string& an) {
  using namespace asymptotics;
  const Variant variant =
      variant_name == "homo" ? Variant::kHomo : Variant::kHetero;

  MixtureParams theta;
  std::optional<Dataset> data;
  if (!data_path.empty()) {
    data = read_dataset_csv(data_path, dim);
    EMConfig ec;
    ec.seed = o.seed;
    ec.n_starts = o.starts;
    ec.max_iter = o.max_iter;
    ec.rel_tol = o.rel_tol;
    theta = variant == Variant::kHomo
                ? fit_mle_homoscedastic(*data, m0, ec).params
                : fit_pmle(*data, m0, ec).params;
  } else if (!design.empty()) {
    theta = get_design(design).truth;
    if (theta.components() != m0)
      throw ArgumentError("design has " + std::to_string(theta.components()) +
                          " components; pass a matching --m0");
  } else {
    throw ArgumentError("limit needs --design or --data");
  }
  if (variant == Variant::kHomo && !theta.homoscedastic) {
    for (size_t j = 1; j < theta.sigma.size(); ++j)
      if ((theta.sigma[j] - theta.sigma[0]).cwiseAbs().maxCoeff() > 1e-12)
        throw ArgumentError("homoscedastic limit needs a shared covariance");
    theta.sigma.resize(1);
    theta.homoscedastic = true;
  }

  std::vector<Vec> grid;
  if (variant == Variant::kHomo)
    grid = default_lambda_grid(theta.sigma_of(0), grid_directions);

  Rng rng = make_rng(o.seed);
  ScoreSystem info = estimate_information(theta, nmc, rng, variant, grid);
  Rng draw_rng = make_stream(o.seed, 0xD12A);
  LimitDistribution dist =
      variant == Variant::kHomo
          ? simulate_limit_homo(info, draws, draw_rng, o.jobs)
          : simulate_limit_hetero(info, draws, draw_rng, o.jobs);

  std::vector<double> levels = parse_double_list(levels_str);
  BootstrapResult overlay;
  const bool with_overlay = overlay_B > 0 && data.has_value();
  if (with_overlay) {
    EMTestConfig cfg = make_test_config(o, tau_set, K, an);
    resolve_an(cfg, data->n());
    overlay = bootstrap_test(*data, m0, statistic_from_name(stat_name),
                             overlay_B, cfg, o.seed, 0.05, o.jobs);
  }

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw DataError("cannot write '" + out_path + "'");
    os = &file;
  }
  os->precision(10);
  *os << (with_overlay ? "level,quantile,bootstrap_quantile" : "level,quantile")
      << '\n';
  for (double level : levels) {
    *os << level << ',' << dist.quantile(level);
    if (with_overlay) *os << ',' << quantile(overlay.replicates, level);
    *os << '\n';
  }
  return 0;
}

int cmd_derivcheck(int cases, const CommonOpts& o) {
  DerivCheckReport rep = run_derivative_checks(cases, o.seed);
  std::printf("cases: %d\n", rep.cases);
  std::printf("max relative error, analytic vs finite differences: %.3e\n",
              rep.max_fd_rel);
  std::printf("max relative error, mean route vs covariance route: %.3e\n",
              rep.max_identity_rel);
  std::printf("max relative error, v route vs finite differences:  %.3e\n",
              rep.max_v_fd_rel);
  std::printf("max vanishing-derivative residual:                  %.3e\n",
              rep.max_vanishing_abs);
  std::printf("max reparameterized-identity relative error:        %.3e\n",
              rep.max_lemma_rel);
  for (const std::string& s : rep.failures) std::printf("FAIL %s\n", s.c_str());
  std::printf("%s\n", rep.pass ? "all checks passed" : "CHECKS FAILED");
  return rep.pass ? 0 : kExitNumeric;
}

int cmd_preprocess_rat(const std::string& in_path, const std::string& out_path) {
  Dataset out = preprocess_rat_csv(in_path);
  write_dataset_csv(out_path, out);
  std::printf("wrote %d rows to %s\n", out.n(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Order tests for multivariate normal mixture models"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* test = app.add_subcommand(
      "test", "sequential bootstrap tests of M0 = 1, 2, ... on a dataset");
  std::string t_data, t_stat = "em", t_tau = "0.1,0.3,0.5", t_an = "one";
  std::string t_out, t_assign;
  int t_dim = 2, t_mmax = 6, t_B = 199, t_K = 3;
  double t_eps1 = 0.05, t_alpha = 0.05;
  CommonOpts t_common;
  test->add_option("--data", t_data, "dataset CSV (header row)")->required();
  test->add_option("--dim", t_dim, "number of x columns");
  test->add_option("--mmax", t_mmax, "largest null order to test");
  test->add_option("--stat", t_stat, "statistic: em, lrt, lrt-homo");
  test->add_option("--B", t_B, "bootstrap replications");
  test->add_option("--K", t_K, "EM test iterations");
  test->add_option("--tau-set", t_tau, "tau0 grid");
  test->add_option("--an", t_an, "alternative-model a_n: sqrt, one, <real>");
  test->add_option("--eps1", t_eps1, "weight floor of the LRT");
  test->add_option("--alpha", t_alpha, "stopping significance level");
  test->add_option("--out", t_out, "write the report CSV here");
  test->add_option("--assign", t_assign, "write cluster assignments here");
  add_common(test, t_common);

  auto* sim =
      app.add_subcommand("simulate", "size/power study over a built-in design");
  std::string s_design, s_stat = "em", s_tau = "0.1,0.3,0.5", s_an = "one";
  std::string s_levels = "0.10,0.05,0.01", s_out;
  int s_n = 200, s_reps = 500, s_B = 199, s_K = 3;
  double s_eps1 = 0.05;
  CommonOpts s_common;
  sim->add_option("--design", s_design, "design name, e.g. table1-model1")
      ->required();
  sim->add_option("--stat", s_stat, "statistic: em, lrt, lrt-homo");
  sim->add_option("--n", s_n, "sample size per replication");
  sim->add_option("--reps", s_reps, "Monte Carlo replications");
  sim->add_option("--B", s_B, "bootstrap replications");
  sim->add_option("--K", s_K, "EM test iterations");
  sim->add_option("--tau-set", s_tau, "tau0 grid");
  sim->add_option("--an", s_an, "alternative-model a_n: sqrt, one, <real>");
  sim->add_option("--eps1", s_eps1, "weight floor of the LRT");
  sim->add_option("--levels", s_levels, "nominal levels");
  sim->add_option("--out", s_out, "write the results CSV here");
  add_common(sim, s_common);

  auto* lim = app.add_subcommand(
      "limit", "simulate the asymptotic null distribution quantiles");
  std::string l_variant = "hetero", l_design, l_data, l_out;
  std::string l_levels = "0.5,0.8,0.9,0.95,0.99";
  std::string l_stat = "em", l_tau = "0.1,0.3,0.5", l_an = "one";
  int l_dim = 2, l_m0 = 1, l_draws = 20000, l_nmc = 100000;
  int l_grid_dirs = 16, l_overlay_B = 0, l_K = 3;
  CommonOpts l_common;
  lim->add_option("--variant", l_variant, "hetero or homo");
  lim->add_option("--design", l_design, "built-in design supplying the null");
  lim->add_option("--data", l_data, "dataset CSV; null fitted at --m0");
  lim->add_option("--dim", l_dim, "number of x columns for --data");
  lim->add_option("--m0", l_m0, "null component count");
  lim->add_option("--draws", l_draws, "limit-distribution draws");
  lim->add_option("--nmc", l_nmc, "Monte Carlo size for the information");
  lim->add_option("--levels", l_levels, "quantile levels");
  lim->add_option("--out", l_out, "write the quantile CSV here");
  lim->add_option("--grid-directions", l_grid_dirs,
                  "lambda grid directions (homo)");
  lim->add_option("--overlay-B", l_overlay_B,
                  "also bootstrap the dataset with this B");
  lim->add_option("--stat", l_stat, "overlay statistic");
  lim->add_option("--K", l_K, "overlay EM test iterations");
  lim->add_option("--tau-set", l_tau, "overlay tau0 grid");
  lim->add_option("--an", l_an, "overlay alternative-model a_n");
  add_common(lim, l_common);

  auto* dc =
      app.add_subcommand("derivcheck", "derivative and score identity checks");
  int d_cases = 100;
  CommonOpts d_common;
  dc->add_option("--cases", d_cases, "random cases");
  add_common(dc, d_common);

  auto* pr = app.add_subcommand("preprocess-rat",
                                "log-transform, median-center, average "
                                "6-column expression data into 2 columns");
  std::string p_in, p_out;
  pr->add_option("--in", p_in, "raw CSV with 6 columns")->required();
  pr->add_option("--out", p_out, "output dataset CSV")->required();

  std::vector<std::string> args;
  try {
    args = preprocess_argv(argc, argv);
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  std::vector<const char*> cargs;
  cargs.push_back(argv[0]);
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()),
              const_cast<char**>(cargs.data()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (test->parsed())
      return cmd_test(t_data, t_dim, t_mmax, t_stat, t_B, t_K, t_tau, t_an,
                      t_eps1, t_alpha, t_common, t_out, t_assign);
    if (sim->parsed())
      return cmd_simulate(s_design, s_stat, s_n, s_reps, s_B, s_K, s_tau, s_an,
                          s_eps1, s_levels, s_common, s_out);
    if (lim->parsed())
      return cmd_limit(l_variant, l_design, l_data, l_dim, l_m0, l_draws,
                       l_nmc, l_levels, l_common, l_out, l_grid_dirs,
                       l_overlay_B, l_stat, l_K, l_tau, l_an);
    if (dc->parsed()) return cmd_derivcheck(d_cases, d_common);
    if (pr->parsed()) return cmd_preprocess_rat(p_in, p_out);
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  }
  return 0;
}
