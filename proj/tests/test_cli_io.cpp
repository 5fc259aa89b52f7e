#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mixorder/designs.hpp"
#include "mixorder/rng.hpp"
#include "mixorder/harness.hpp"
#include "mixorder/preprocess.hpp"

using namespace mixorder;

TEST_CASE("built-in designs match their parameter tables") {
  SimDesign t1 = get_design("table1-model1");
  CHECK(t1.truth.components() == 1);
  CHECK(t1.test_m0 == 1);
  CHECK(t1.truth.sigma[0](0, 1) == 0.0);

  SimDesign t1b = get_design("table1-model2");
  CHECK(t1b.truth.sigma[0](0, 1) == 0.5);

  SimDesign t2 = get_design("table2-model2");
  CHECK(t2.truth.components() == 2);
  CHECK(t2.truth.alpha[0] == doctest::Approx(0.3));
  CHECK(t2.truth.mu[0][0] == -1.0);
  CHECK(t2.truth.mu[1][0] == 1.0);

  // power tables alias their parameter tables
  SimDesign t3 = get_design("table3-model2");
  CHECK(t3.name == "table2-model2");
  SimDesign t6 = get_design("table6-model2");
  CHECK(t6.name == "table5-model2");
  CHECK(t6.truth.components() == 3);
  CHECK(t6.truth.sigma[0](0, 0) == 0.5);
  CHECK(t6.test_m0 == 2);

  SimDesign t4 = get_design("table4-model1");
  CHECK(t4.truth.alpha[0] == doctest::Approx(0.7));
  CHECK(t4.test_m0 == 2);

  CHECK_THROWS_AS(get_design("table9-model9"), ArgumentError);
}

TEST_CASE("simulation csv schema is stable") {
  CHECK(simulation_csv_header() ==
        "design,stat,n,an,level,K,reject_rate,mc_se,reps,B,seed");
  SimulationConfig cfg;
  cfg.design = "table1-model1";
  cfg.reps = 0;  // dry run
  SimulationResult r = run_size_power(cfg);
  CHECK(r.cells.empty());
  const std::string path = "/tmp/mixorder_sim_schema.csv";
  write_simulation_csv(path, r);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == simulation_csv_header());
  std::string rest;
  CHECK_FALSE(std::getline(in, rest));
  std::remove(path.c_str());
}

TEST_CASE("statistic names round trip") {
  for (auto kind : {StatisticKind::kEmTest, StatisticKind::kLrtHetero,
                    StatisticKind::kLrtHomo})
    CHECK(statistic_from_name(statistic_name(kind)) == kind);
  CHECK_THROWS_AS(statistic_from_name("wald"), ArgumentError);
}

TEST_CASE("rat preprocessing: trivial fixtures") {
  // all-ones: logs are zero, medians zero, output all zeros
  RowMat ones = RowMat::Constant(5, 6, 1.0);
  Dataset z1 = preprocess_rat(ones);
  CHECK(z1.x.cwiseAbs().maxCoeff() == 0.0);

  // column-constant input also centers to zero
  RowMat colconst(4, 6);
  for (int j = 0; j < 6; ++j) colconst.col(j).setConstant(std::exp(j + 1.0));
  Dataset z2 = preprocess_rat(colconst);
  CHECK(z2.x.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("rat preprocessing: hand-computed 3-row fixture") {
  RowMat raw(3, 6);
  // chosen so the logs are simple: log(e^k) = k
  raw << std::exp(1.0), std::exp(2.0), std::exp(1.0), std::exp(2.0),
      std::exp(3.0), std::exp(4.0),                       // row 1
      std::exp(2.0), std::exp(4.0), std::exp(2.0), std::exp(3.0),
      std::exp(4.0), std::exp(5.0),                       // row 2
      std::exp(3.0), std::exp(6.0), std::exp(3.0), std::exp(4.0),
      std::exp(5.0), std::exp(6.0);                       // row 3
  // logs: col1 = (1,2,3) median 2; col2 = (2,4,6) median 4;
  // col3 = (1,2,3) median 2; col4 = (2,3,4) median 3; col5 = (3,4,5) median 4;
  // col6 = (4,5,6) median 5
  // centered row1: (-1,-2,-1,-1,-1,-1) -> x = (-1.5, -1.0)
  // centered row2: ( 0, 0, 0, 0, 0, 0) -> x = ( 0.0,  0.0)
  // centered row3: ( 1, 2, 1, 1, 1, 1) -> x = ( 1.5,  1.0)
  Dataset out = preprocess_rat(raw);
  CHECK(out.x(0, 0) == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(out.x(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.x(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.x(2, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(out.x(2, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rat preprocessing: error locations") {
  RowMat bad = RowMat::Constant(2, 6, 1.0);
  bad(1, 3) = -2.0;
  try {
    preprocess_rat(bad);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(std::string(e.what()).find("column 4") != std::string::npos);
  }
  RowMat wrong_cols = RowMat::Constant(2, 5, 1.0);
  CHECK_THROWS_AS(preprocess_rat(wrong_cols), DataError);
}

#ifdef MIXORDER_BIN
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MIXORDER_BIN) + " " + args +
                          " >/tmp/mixorder_cli_out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string cli_output() {
  std::ifstream in("/tmp/mixorder_cli_out.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli exit codes: usage, data, and numeric errors") {
  CHECK(run_cli("") == 2);                         // missing subcommand
  CHECK(run_cli("simulate") == 2);                 // missing --design
  CHECK(run_cli("simulate --design nope --reps 0") == 2);
  {
    std::ofstream out("/tmp/mixorder_cli_empty.csv");
  }
  CHECK(run_cli("test --data /tmp/mixorder_cli_empty.csv --dim 2 --B 5") == 3);
  CHECK(run_cli("test --data /tmp/missing_file_abc.csv --dim 2") == 3);
}

TEST_CASE("cli config file: schema version and unknown keys") {
  {
    std::ofstream cfg("/tmp/mixorder_cfg_ok.cfg");
    cfg << "schema_version = 1\nreps = 0\ndesign = table1-model1\n";
  }
  CHECK(run_cli("simulate --config /tmp/mixorder_cfg_ok.cfg") == 0);
  CHECK(cli_output().find("design,stat,n,an") != std::string::npos);

  {
    std::ofstream cfg("/tmp/mixorder_cfg_flag_wins.cfg");
    cfg << "schema_version = 1\ncases = 5\nseed = 3\n";
  }
  CHECK(run_cli("derivcheck --config /tmp/mixorder_cfg_flag_wins.cfg "
                "--cases 3") == 0);
  CHECK(cli_output().find("cases: 3") != std::string::npos);  // flag wins

  {
    std::ofstream cfg("/tmp/mixorder_cfg_nover.cfg");
    cfg << "reps = 0\ndesign = table1-model1\n";
  }
  CHECK(run_cli("simulate --config /tmp/mixorder_cfg_nover.cfg") == 3);

  {
    std::ofstream cfg("/tmp/mixorder_cfg_unknown.cfg");
    cfg << "schema_version = 1\nreps = 0\ndesign = table1-model1\nbogus = 7\n";
  }
  CHECK(run_cli("simulate --config /tmp/mixorder_cfg_unknown.cfg") == 2);
}

TEST_CASE("cli test subcommand writes the report schema") {
  {
    std::ofstream data("/tmp/mixorder_cli_data.csv");
    data << "x1,x2\n";
    Rng rng = make_rng(3);
    for (int i = 0; i < 40; ++i)
      data << rng.normal() << ',' << rng.normal() << '\n';
  }
  CHECK(run_cli("test --data /tmp/mixorder_cli_data.csv --dim 2 --mmax 1 "
                "--B 7 --starts 3 --seed 4 --out /tmp/mixorder_cli_report.csv "
                "--assign /tmp/mixorder_cli_assign.csv") == 0);
  std::ifstream rep("/tmp/mixorder_cli_report.csv");
  std::string header;
  std::getline(rep, header);
  CHECK(header == "m0,K,p_value,aic,bic,reject");
  std::ifstream asg("/tmp/mixorder_cli_assign.csv");
  std::getline(asg, header);
  CHECK(header == "row,cluster");
  int rows = 0;
  std::string line;
  while (std::getline(asg, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 40);
}

TEST_CASE("cli limit subcommand emits the quantile schema") {
  {
    std::ofstream data("/tmp/mixorder_cli_d1.csv");
    data << "x1\n";
    Rng rng = make_rng(9);
    for (int i = 0; i < 80; ++i) data << rng.normal() << '\n';
  }
  CHECK(run_cli("limit --variant hetero --data /tmp/mixorder_cli_d1.csv "
                "--dim 1 --m0 1 --nmc 2000 --draws 150 --levels 0.5,0.9 "
                "--seed 2 --out /tmp/mixorder_cli_limit.csv") == 0);
  std::ifstream out("/tmp/mixorder_cli_limit.csv");
  std::string header;
  std::getline(out, header);
  CHECK(header == "level,quantile");
  int rows = 0;
  std::string line;
  while (std::getline(out, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("cli preprocess-rat and derivcheck smoke") {
  {
    std::ofstream raw("/tmp/mixorder_rat_raw.csv");
    raw << "a,b,c,d,e,f\n";
    for (int i = 0; i < 3; ++i)
      raw << "1.0,1.0,1.0,1.0,1.0,1.0\n";
  }
  CHECK(run_cli("preprocess-rat --in /tmp/mixorder_rat_raw.csv --out "
                "/tmp/mixorder_rat_out.csv") == 0);
  std::ifstream out("/tmp/mixorder_rat_out.csv");
  std::string header;
  std::getline(out, header);
  CHECK(header == "x1,x2");

  CHECK(run_cli("derivcheck --cases 5 --seed 2") == 0);
}
#endif
