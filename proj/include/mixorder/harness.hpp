#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixorder/bootstrap.hpp"
#include "mixorder/designs.hpp"

namespace mixorder {

// One size/power study: reps datasets from a design, a bootstrap test on
// each, rejection frequencies per (level, K).
struct SimulationConfig {
  std::string design = "table1-model1";
  StatisticKind stat = StatisticKind::kEmTest;
  int n = 200;
  int reps = 500;
  int B = 199;
  EMTestConfig test;
  double epsilon1 = 0.05;
  std::vector<double> levels = {0.10, 0.05, 0.01};
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string a_n_label = "1";  // echoed into the output table
};

struct SimulationCell {
  double level = 0.0;
  int k = 1;
  double reject_rate = 0.0;
  double mc_se = 0.0;
};

struct SimulationResult {
  SimulationConfig config;
  std::vector<SimulationCell> cells;
  // p_values[k-1][rep]; LRT statistics carry a single k slot
  std::vector<std::vector<double>> p_values;
  int failed_reps = 0;
  double elapsed_seconds = 0.0;
  double seconds_per_rep() const {
    const int done = config.reps - failed_reps;
    return done > 0 ? elapsed_seconds / done : 0.0;
  }
};

SimulationResult run_size_power(const SimulationConfig& config);

std::string simulation_csv_header();
void write_simulation_csv(const std::string& path, const SimulationResult& r);

std::string statistic_name(StatisticKind kind);
StatisticKind statistic_from_name(const std::string& name);

}  // namespace mixorder
