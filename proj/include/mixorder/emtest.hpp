#pragma once

#include <utility>
#include <vector>

#include "mixorder/em.hpp"

namespace mixorder {

// Boxes on one mean coordinate separating the null components: cut points are
// midpoints of consecutive fitted means, outer boxes unbounded.
struct PartitionEstimate {
  std::vector<double> cut_points;  // M0-1, strictly increasing
  int coord = 0;                   // mean coordinate the boxes constrain
  bool fallback_coord = false;     // set when first coordinates were near-tied

  int boxes() const { return static_cast<int>(cut_points.size()) + 1; }
  // closed box [lo, hi] for 0-based box index; outer bounds are +-inf
  std::pair<double, double> box(int j) const;
};

struct EMTestConfig {
  std::vector<double> tau_set = {0.1, 0.3, 0.5};
  int K = 3;
  double a_n = 1.0;  // penalty weight of the (M0+1)-component branches
  EMConfig em;       // inner EM settings (null fit uses em.a_n_rule)

  void validate() const;
};

struct GemStep {
  MixtureParams params;
  double tau = 0.5;
  double penalized = 0.0;  // PL_n^m + p(tau^{(k)})
  double m_nk = 0.0;       // M_n^{m(k)}(tau0)
};

struct BranchResult {
  int m = 1;         // 1-based split index
  double tau0 = 0.5;
  std::vector<GemStep> steps;  // k = 1..K
};

struct EMTestResult {
  std::vector<BranchResult> per_split;
  std::vector<double> em_m_k;         // per split m: max over tau0 of M^{(K)}
  std::vector<double> statistic_by_k; // EM_n^{(k)}, k = 1..K
  double statistic = 0.0;             // EM_n^{(K)}
  FitResult null_fit;
  MixtureParams alt_params;           // best (M0+1)-component parameters found
  PartitionEstimate partitions;
  double monotonicity_violation = 0.0;
};

PartitionEstimate build_partitions(const FitResult& null_fit);

// Penalty anchors of Eq-style assignment: component j of the (M0+1)-model is
// anchored at the null covariance of the box it occupies under split m.
std::vector<Mat> split_anchors(const MixtureParams& null_params, int m);

// Restricted penalized MLE over the split-m feasible set: the pair (m, m+1)
// holds alpha_m/(alpha_m+alpha_{m+1}) = tau0 exactly and every component mean
// is box-constrained on partitions.coord.
MixtureParams restricted_initial_fit(const Dataset& data, int m, double tau0,
                                     const PartitionEstimate& partitions,
                                     const EMTestConfig& config,
                                     const FitResult& null_fit);

// K-entry trajectory: entry 1 evaluates the restricted fit at tau0; entries
// 2..K apply unrestricted generalized EM cycles with the penalized tau update.
std::vector<GemStep> gem_k_steps(const MixtureParams& start, double tau0,
                                 const Dataset& data,
                                 const std::vector<Mat>& anchors, double a_n,
                                 int K, double null_loglik, int pair_index);

EMTestResult em_test_statistic(const Dataset& data, int M0,
                               const EMTestConfig& config);

struct LrtResult {
  double statistic = 0.0;
  FitResult null_fit;
  FitResult alt_fit;
};

// 2{L_n(PMLE of M0+1, weights in [eps1,1-eps1]) - L_n(PMLE of M0)}.
LrtResult lrt_statistic_hetero(const Dataset& data, int M0, double epsilon1,
                               const EMTestConfig& config);

// Homoscedastic LRTS: unrestricted common-variance MLE fits, no penalty.
LrtResult lrt_statistic_homo(const Dataset& data, int M0,
                             const EMConfig& config = EMConfig{});

}  // namespace mixorder
