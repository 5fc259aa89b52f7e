#include "mixorder/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "mixorder/parallel.hpp"
#include "mixorder/rng.hpp"

namespace mixorder {

std::string statistic_name(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::kEmTest: return "em";
    case StatisticKind::kLrtHetero: return "lrt";
    case StatisticKind::kLrtHomo: return "lrt-homo";
  }
  return "?";
}

StatisticKind statistic_from_name(const std::string& name) {
  if (name == "em") return StatisticKind::kEmTest;
  if (name == "lrt") return StatisticKind::kLrtHetero;
  if (name == "lrt-homo") return StatisticKind::kLrtHomo;
  throw ArgumentError("unknown statistic '" + name + "'");
}

SimulationResult run_size_power(const SimulationConfig& config) {
  config.test.validate();
  if (config.reps < 0) throw ArgumentError("reps must be nonnegative");
  if (config.B < 1) throw ArgumentError("B must be >= 1");
  const SimDesign design = get_design(config.design);
  const int k_slots =
      config.stat == StatisticKind::kEmTest ? config.test.K : 1;

  SimulationResult result;
  result.config = config;
  result.p_values.assign(k_slots, {});
  if (config.reps == 0) return result;  // dry run: schema only

  const auto t0 = std::chrono::steady_clock::now();
  struct Slot {
    std::vector<double> p;
    bool ok = false;
  };
  std::vector<Slot> slots(config.reps);
  parallel_for(config.reps, config.jobs, [&](std::size_t r) {
    Rng data_rng = make_stream(config.seed, 2 * r);
    const std::uint64_t boot_seed = Rng::derive(config.seed, 2 * r + 1);
    try {
      Dataset data = sample(design.truth, config.n, data_rng);
      BootstrapResult b =
          bootstrap_test(data, design.test_m0, config.stat, config.B,
                         config.test, boot_seed, config.epsilon1, /*jobs=*/1);
      if (config.stat == StatisticKind::kEmTest)
        slots[r].p = b.p_value_by_k;
      else
        slots[r].p = {b.p_value};
      slots[r].ok = true;
    } catch (const NumericError&) {
      slots[r].ok = false;
    }
  });

  for (const Slot& s : slots) {
    if (!s.ok) {
      ++result.failed_reps;
      continue;
    }
    for (int k = 0; k < k_slots; ++k) result.p_values[k].push_back(s.p[k]);
  }
  if (result.failed_reps * 100 > config.reps)
    throw NumericError("more than 1% of Monte Carlo replications failed");

  for (int k = 0; k < k_slots; ++k) {
    const auto& ps = result.p_values[k];
    const double done = static_cast<double>(ps.size());
    for (double level : config.levels) {
      int rejections = 0;
      for (double p : ps)
        if (p <= level) ++rejections;
      SimulationCell cell;
      cell.level = level;
      cell.k = k + 1;
      cell.reject_rate = done > 0 ? rejections / done : 0.0;
      cell.mc_se =
          done > 0 ? std::sqrt(cell.reject_rate * (1.0 - cell.reject_rate) / done)
                   : 0.0;
      result.cells.push_back(cell);
    }
  }
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

std::string simulation_csv_header() {
  return "design,stat,n,an,level,K,reject_rate,mc_se,reps,B,seed";
}

void write_simulation_csv(const std::string& path, const SimulationResult& r) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << simulation_csv_header() << '\n';
  out.precision(10);
  for (const SimulationCell& c : r.cells) {
    out << r.config.design << ',' << statistic_name(r.config.stat) << ','
        << r.config.n << ',' << r.config.a_n_label << ',' << c.level << ','
        << c.k << ',' << c.reject_rate << ',' << c.mc_se << ','
        << r.config.reps << ',' << r.config.B << ',' << r.config.seed << '\n';
  }
}

}  // namespace mixorder
