#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mixorder/common.hpp"
#include "mixorder/mixture.hpp"
#include "mixorder/rng.hpp"

namespace mixorder::asymptotics {

enum class Variant { kHetero, kHomo };

// lexicographic multi-index lists 1<=i<=j<=k(<=l)<=d (stored 0-based)
std::vector<std::array<int, 3>> index_triples(int d);
std::vector<std::array<int, 4>> index_quads(int d);

inline int dim_mu3(int d) { return d * (d + 1) * (d + 2) / 6; }
inline int dim_mu4(int d) { return d * (d + 1) * (d + 2) * (d + 3) / 24; }

// Polynomial blocks built from distinct-permutation sums; entry order matches
// index_triples / index_quads.
Vec lambda_mu_v(const Vec& lmu, const Vec& lv);  // (lambda_mu x lambda_v) terms
Vec lambda_v2(const Vec& lv);                    // lambda_v second-order terms
Vec lambda_mu4(const Vec& lmu);                  // fourth-order mean terms
Vec lambda_mu3(const Vec& lmu);                  // third-order mean terms

// Reparameterization separating the split direction lambda from the fitted
// location nu; exact closed-form inverse.
struct HeteroComponents {
  Vec mu1, mu2, v1, v2;
};
struct HeteroReparam {
  Vec nu_mu, nu_v, lambda_mu, lambda_v;
};
HeteroComponents reparam_hetero(const Vec& nu_mu, const Vec& nu_v,
                                const Vec& lambda_mu, const Vec& lambda_v,
                                double alpha);
HeteroReparam reparam_hetero_inverse(const Vec& mu1, const Vec& mu2,
                                     const Vec& v1, const Vec& v2, double alpha);

struct HomoComponents {
  Vec mu1, mu2, v;
};
HomoComponents reparam_homo(const Vec& nu_mu, const Vec& nu_v,
                            const Vec& lambda, double alpha);

// Stacked score vector at a null parameter point. Blocks, in order:
// hetero: (M0-1 weight scores) (gamma, mu, v scores) then per component
//         third-order (mu,v-mixed) and fourth-order mean blocks;
// homo:   same eta block, per component pure third/fourth-order mean blocks.
class ScoreEvaluator {
 public:
  ScoreEvaluator(const MixtureParams& theta_star, Variant variant,
                 std::vector<Vec> lambda_grid = {});
  ~ScoreEvaluator();
  ScoreEvaluator(ScoreEvaluator&&) noexcept;

  int eta_dim() const { return eta_dim_; }
  int lambda_dim() const { return lambda_dim_; }   // all components
  int alpha_grid_dim() const { return alpha_dim_; }  // homo GP block
  int block_size() const { return block_; }

  // fills s_eta (eta_dim), s_lambda (lambda_dim), s_alpha (alpha_grid_dim)
  void evaluate(const Vec& x, const std::optional<Vec>& z, double* s_eta,
                double* s_lambda, double* s_alpha) const;

  Vec evaluate_stacked(const Vec& x,
                       const std::optional<Vec>& z = std::nullopt) const;

  const std::vector<Vec>& lambda_grid() const { return grid_; }
  const MixtureParams& theta() const { return theta_; }
  Variant variant() const { return variant_; }

 private:
  struct Component;
  MixtureParams theta_;
  Variant variant_;
  std::vector<Vec> grid_;
  std::vector<Component> comps_;
  std::vector<std::array<int, 3>> triples_;
  std::vector<std::array<int, 4>> quads_;
  int eta_dim_ = 0, lambda_dim_ = 0, alpha_dim_ = 0, block_ = 0;
};

Vec hetero_scores(const Vec& x, const std::optional<Vec>& z,
                  const MixtureParams& theta_star);
// Returns the eta+lambda stack; s_alpha values on the grid (per component,
// grid-major within component) are appended after the lambda blocks.
Vec homo_scores(const Vec& x, const std::optional<Vec>& z,
                const MixtureParams& theta_star,
                const std::vector<Vec>& lambda_grid);

// Information blocks estimated by Monte Carlo averaging of score outer
// products over draws from theta_star.
struct ScoreSystem {
  Variant variant = Variant::kHetero;
  int d = 0, M0 = 0, p = 0;
  int block = 0;  // per-component lambda block size
  Mat i_eta;
  Mat i_lambda;          // E[s_lambda s_lambda']
  Mat i_lambda_eta;      // E[s_lambda s_eta']
  Mat i_lambda_dot_eta;  // Schur complement against the eta block
  // joint Schur-complemented covariance of (lambda blocks, alpha grid blocks);
  // equals i_lambda_dot_eta for the heteroscedastic variant
  Mat sim_cov;
  std::vector<Vec> lambda_grid;
  int n_mc = 0;

  Mat component_block(int m) const;  // m-th diagonal block of i_lambda_dot_eta
};

ScoreSystem estimate_information(const MixtureParams& theta_star, int n_mc,
                                 Rng& rng, Variant variant,
                                 std::vector<Vec> lambda_grid = {});

// Default grid for the homoscedastic Gaussian-process part: directions times
// radii {0.25, 0.5, 1, 1.5, 2} * sqrt(tr Sigma / d).
std::vector<Vec> default_lambda_grid(const Mat& sigma_star, int directions = 16);

// Cones of attainable rescaled-parameter limits; map() evaluates the
// polynomial parameterization.
struct ConeSpec {
  enum class Kind { kHeteroJ1, kHeteroJ2, kHomoJ1, kHomoJ2 };

  static ConeSpec make(Kind kind, int d);

  Kind kind = Kind::kHeteroJ1;
  int d = 0;
  int lambda_dim() const;
  int out_dim() const;
  Vec map(const Vec& lambda) const;
};

struct ConeProjection {
  Vec t_hat;       // projection, in the cone image
  Vec lambda_hat;  // parameter achieving it
  double r_min = 0.0;
  double v = 0.0;  // z' I z - r_min, always >= 0
};

// minimize (t - z)' info (t - z) over t in the cone image; multistart
// Nelder-Mead with a Levenberg-Marquardt polish.
ConeProjection cone_project(const Vec& z, const Mat& info, const ConeSpec& cone,
                            int multistart, Rng& rng);

struct LimitDistribution {
  std::vector<double> samples;  // sorted ascending
  double quantile(double level) const;
  int failed_draws = 0;
};

LimitDistribution simulate_limit_hetero(const ScoreSystem& info, int draws,
                                        Rng& rng, int jobs = 1,
                                        int multistart = 32);
LimitDistribution simulate_limit_homo(const ScoreSystem& info, int draws,
                                      Rng& rng, int jobs = 1,
                                      int multistart = 32);

// Finite-difference verification of the vanishing-derivative structure of the
// reparameterized mixture density at the null point, and of the nonzero
// fourth-order / cross-derivative identities against the analytic normal
// derivatives.
struct VanishingCheck {
  std::string label;
  double value = 0.0;      // finite-difference result (scaled)
  double reference = 0.0;  // analytic value (0 for vanishing checks)
  double error = 0.0;      // abs for vanishing, relative otherwise
  bool vanishing = true;
  bool pass = false;
};

struct VanishingReport {
  std::vector<VanishingCheck> checks;
  double max_vanishing_error = 0.0;
  double max_identity_error = 0.0;
  bool all_pass = true;
};

VanishingReport check_vanishing_scores(const MixtureParams& theta_star,
                                       double alpha, Variant variant,
                                       double tol_vanish = 1e-6,
                                       double tol_identity = 1e-3,
                                       std::uint64_t seed = 7);

}  // namespace mixorder::asymptotics
