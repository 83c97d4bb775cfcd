#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "locadmm/errors.hpp"
#include "locadmm/harness.hpp"
#include "test_util.hpp"

using namespace locadmm;
using namespace locadmm::harness;

namespace {

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override {
    unsetenv("LOCADMM_SEED");
    dir_ = std::filesystem::temp_directory_path() /
           ("locadmm_harness_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override {
    unsetenv("LOCADMM_SEED");
    std::filesystem::remove_all(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string read(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string generate(int nodes, int anchors, double range, std::uint64_t seed,
                       const std::string& name = "net.json") {
    GenerateConfig g{nodes, anchors, range, 1.0, 2, 0.02, NoiseKind::AdditiveWhite, seed, path(name)};
    std::ostringstream out, err;
    EXPECT_EQ(cmd_generate(g, out, err), kExitOk) << err.str();
    return g.out;
  }

  RunConfig run_config(const std::string& net) const {
    RunConfig rc;
    rc.net = net;
    rc.c = 0.1;
    rc.rho = 0.1;
    rc.iterations = 20;
    rc.init = "uniform";
    rc.seed = 3;
    return rc;
  }

  std::filesystem::path dir_;
};

TEST_F(HarnessTest, GenerateWritesLoadableFile) {
  GenerateConfig g{108, 8, 0.23, 1.0, 2, 0.02, NoiseKind::AdditiveWhite, 7, path("net.json")};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_generate(g, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("nodes 108"), std::string::npos);
  const auto inst = load_network(g.out);
  EXPECT_EQ(inst.graph.num_nodes(), 108);
  EXPECT_EQ(inst.graph.num_anchors(), 8);
  EXPECT_TRUE(inst.truth.has_value());

  g.noise = NoiseKind::RangeDependent;
  g.out = path("range.json");
  ASSERT_EQ(cmd_generate(g, out, err), kExitOk);
  EXPECT_FALSE(load_network(g.out).measurements == inst.measurements);
}

TEST_F(HarnessTest, GenerateWithoutOutputFails) {
  GenerateConfig g{10, 2, 0.5, 1.0, 2, 0.0, NoiseKind::AdditiveWhite, 1, ""};
  std::ostringstream out, err;
  EXPECT_NE(cmd_generate(g, out, err), kExitOk);
}

TEST_F(HarnessTest, TraceFormat) {
  const auto net = generate(15, 3, 0.45, 2);
  RunConfig rc = run_config(net);
  rc.trace = path("t.csv");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(rc, out, err), kExitOk) << err.str();
  std::istringstream csv(read(rc.trace));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, kTraceHeader);
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("0,", 0), 0u);
  // t = 0 has no U, F, potential or wall time.
  std::vector<std::string> fields;
  std::stringstream row(line);
  for (std::string f; std::getline(row, f, ',');) fields.push_back(f);
  if (line.back() == ',') fields.push_back("");
  ASSERT_EQ(fields.size(), 10u);
  EXPECT_TRUE(fields[3].empty() && fields[5].empty() && fields[7].empty() && fields[9].empty());
  EXPECT_FALSE(fields[1].empty());
  EXPECT_EQ(fields[8], "0");
  int rows = 1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 21);

  const auto meta = read(rc.trace + ".meta.json");
  EXPECT_NE(meta.find("\"algorithm\": \"full\""), std::string::npos);
  EXPECT_NE(meta.find("\"kappa2\""), std::string::npos);
}

TEST_F(HarnessTest, RunIsDeterministicAcrossThreads) {
  const auto net = generate(30, 4, 0.35, 5);
  std::string reference;
  for (unsigned threads : {1u, 4u, 8u}) {
    RunConfig rc = run_config(net);
    rc.algorithm = "lite";
    rc.threads = threads;
    rc.trace = path("t" + std::to_string(threads) + ".csv");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(rc, out, err), kExitOk) << err.str();
    const auto text = read(rc.trace);
    if (reference.empty()) reference = text;
    EXPECT_EQ(text, reference);
  }
}

TEST_F(HarnessTest, FullAndLiteTracesAgree) {
  const auto inst = load_network(generate(20, 3, 0.4, 6));
  RunConfig rc = run_config("");
  rc.iterations = 100;
  const auto full = execute_run(inst, rc);
  rc.algorithm = "lite";
  const auto lite = execute_run(inst, rc);
  ASSERT_EQ(full.trace.rows.size(), lite.trace.rows.size());
  for (std::size_t t = 0; t < full.trace.rows.size(); ++t) {
    EXPECT_NEAR(*full.trace.rows[t].rmse, *lite.trace.rows[t].rmse, 1e-9);
    EXPECT_NEAR(full.trace.rows[t].P, lite.trace.rows[t].P, 1e-9 * std::max(1.0, full.trace.rows[t].P));
  }
}

TEST_F(HarnessTest, EstimatesAndCompare) {
  const auto net = generate(15, 3, 0.45, 8);
  RunConfig rc = run_config(net);
  rc.estimates = path("est.json");
  rc.init = "truth";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(rc, out, err), kExitOk) << err.str();
  std::ostringstream cmp_out;
  ASSERT_EQ(cmd_compare({net, rc.estimates}, cmp_out, err), kExitOk) << err.str();
  EXPECT_EQ(cmp_out.str().rfind("rmse ", 0), 0u);
  const double reported = std::stod(cmp_out.str().substr(5));
  const auto truth = load_network(net);
  const auto est = load_network(rc.estimates);
  EXPECT_DOUBLE_EQ(reported, rmse(est.truth->positions, *truth.truth, truth.graph));

  std::ostringstream bad;
  EXPECT_NE(cmd_compare({net, path("missing.json")}, bad, err), kExitOk);
}

TEST_F(HarnessTest, AutoParameters) {
  const auto inst = load_network(generate(12, 3, 0.5, 9));
  RunConfig rc = run_config("");
  rc.c.reset();
  rc.rho.reset();
  rc.iterations = 3;
  const auto o = execute_run(inst, rc);
  const auto b = parameter_bounds(inst.graph, inst.measurements, 1.0);
  EXPECT_EQ(o.params.c, 1.0);
  EXPECT_EQ(o.params.rho, b.rho_min);
  rc.rho_scale = 0.5;
  EXPECT_EQ(execute_run(inst, rc).params.rho, 0.5 * b.rho_min);
}

TEST_F(HarnessTest, InitSpecs) {
  const auto net = generate(12, 3, 0.5, 10);
  const auto inst = load_network(net);
  RunConfig rc = run_config("");
  rc.iterations = 2;
  for (const std::string& init : std::vector<std::string>{"zeros", "uniform", "uniform:-2,2", "uniform-positions",
                                 "uniform-positions:0,1", "truth", "file:" + net}) {
    rc.init = init;
    EXPECT_NO_THROW(execute_run(inst, rc)) << init;
  }
  rc.init = "truth";
  const auto at_truth = execute_run(inst, rc);
  EXPECT_EQ(*at_truth.trace.rows[0].rmse, 0.0);
  for (const std::string& bad : std::vector<std::string>{"gaussian", "uniform:2,1", "uniform:x", "file:" + path("none.json")}) {
    rc.init = bad;
    EXPECT_ANY_THROW(execute_run(inst, rc)) << bad;
  }
}

TEST_F(HarnessTest, SeedFromEnvironment) {
  EXPECT_EQ(resolve_seed(5), 5u);
  setenv("LOCADMM_SEED", "42", 1);
  EXPECT_EQ(resolve_seed(5), 42u);

  const auto net = generate(12, 3, 0.5, 11);
  RunConfig rc = run_config(net);
  rc.trace = path("env.csv");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(rc, out, err), kExitOk);
  unsetenv("LOCADMM_SEED");
  rc.seed = 42;
  rc.trace = path("flag.csv");
  ASSERT_EQ(cmd_run(rc, out, err), kExitOk);
  EXPECT_EQ(read(path("env.csv")), read(path("flag.csv")));
}

TEST_F(HarnessTest, DivergenceExitCode) {
  const auto net = generate(12, 3, 0.5, 12);
  RunConfig rc = run_config(net);
  rc.rho = 1e-310;
  rc.trace = path("div.csv");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(rc, out, err), kExitDiverged);
  EXPECT_NE(err.str().find("diverged"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(rc.trace));
}

TEST_F(HarnessTest, RunRejectsBadInput) {
  const auto net = generate(12, 3, 0.5, 13);
  std::ostringstream out, err;
  RunConfig rc = run_config(net);
  rc.algorithm = "fast";
  EXPECT_EQ(cmd_run(rc, out, err), kExitFailure);
  rc = run_config(path("absent.json"));
  EXPECT_EQ(cmd_run(rc, out, err), kExitFailure);
  rc = run_config(net);
  rc.c = -1.0;
  EXPECT_EQ(cmd_run(rc, out, err), kExitFailure);
}

TEST_F(HarnessTest, SweepGrid) {
  SweepConfig sc;
  sc.base = run_config(generate(12, 3, 0.5, 14));
  sc.base.iterations = 10;
  sc.c_values = {0.05, 0.1, 0.2};
  sc.rho_values = {0.05, 0.1, 0.2};
  sc.seeds = {1, 2};
  sc.out = path("cells.csv");
  sc.runs_out = path("runs.csv");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(sc, out, err), kExitOk) << err.str();
  std::istringstream cells(read(sc.out));
  std::string line;
  std::getline(cells, line);
  EXPECT_EQ(line, "c,rho,runs,final_rmse_mean,final_rmse_std,min_F,diverged_runs");
  int rows = 0;
  while (std::getline(cells, line)) {
    ++rows;
    EXPECT_NE(line.find(",2,"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 9);
  std::istringstream runs(read(sc.runs_out));
  int run_rows = -1;
  while (std::getline(runs, line)) ++run_rows;
  EXPECT_EQ(run_rows, 18);

  sc.out.clear();
  EXPECT_EQ(cmd_sweep(sc, out, err), kExitFailure);
}

TEST_F(HarnessTest, OracleCheckCommand) {
  const auto net = generate(6, 2, 0.6, 15);
  OracleCheckConfig oc{net, {}};
  oc.options.trials = 3;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_oracle_check(oc, out, err), kExitOk) << out.str() << err.str();
  EXPECT_NE(out.str().find("PASS combine_z"), std::string::npos);

  ClosedForms corrupted;
  corrupted.cBtB = [](const NodeBlockVector& v, double c) { return apply_cBtB(v, c + 1e-6); };
  std::ostringstream bad;
  EXPECT_NE(cmd_oracle_check(oc, bad, err, corrupted), kExitOk);
  EXPECT_NE(bad.str().find("FAIL apply_cBtB"), std::string::npos);

  oc.net = generate(9, 2, 0.6, 16, "big.json");
  std::ostringstream big_out, big_err;
  EXPECT_NE(cmd_oracle_check(oc, big_out, big_err), kExitOk);
  EXPECT_NE(big_err.str().find("limited to 8"), std::string::npos);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
