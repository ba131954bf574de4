#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "schema_lite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = TIM_CLI_PATH;
const std::string kSource = TIM_SOURCE_DIR;

struct CliResult {
  int code;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult run(const std::string& args) {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + kCli + "' " + args + " > stdout.txt 2> '" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
  }

  std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }

  void write_config(const std::string& csv) {
    write("cfg.json", R"({"input": ")" + csv + R"(", "schema": {"x": "covariate_continuous", "d": "covariate_discrete", "T": "treatment", "Y": "outcome"}, "output_dir": "out"})");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, MatchHappyPath) {
  write("d.csv", "x,d,T,Y\n1,a,1,3\n1,a,0,1\n2,b,1,5\n2,b,0,2\n");
  write_config("d.csv");
  const CliResult r = run("match --config cfg.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(slurp(dir_ / "out/match_report.json"));
  EXPECT_EQ(rep["match"]["t_fraction"].get<double>(), 1.0);
  EXPECT_TRUE(tim::test::validate_against(rep, kSource + "/schemas/match_report.schema.json").empty());
}

TEST_F(Cli, EstimateExactTwins) {
  // Exact twins: CATE is the mean of the pair differences (2 and 3).
  write("d.csv", "x,d,T,Y\n1,a,1,3\n1,a,0,1\n2,b,1,5\n2,b,0,2\n");
  write_config("d.csv");
  const CliResult r = run("estimate --config cfg.json --dump-omega");
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(slurp(dir_ / "out/estimate_report.json"));
  EXPECT_DOUBLE_EQ(rep["estimate"]["overall_cate"].get<double>(), 2.5);
  EXPECT_EQ(rep["imbalance"]["l1_pre"].get<double>(), 0.0);
  EXPECT_TRUE(tim::test::validate_against(rep, kSource + "/schemas/estimate_report.schema.json").empty());
  EXPECT_TRUE(fs::exists(dir_ / "out/strata.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out/omega.json"));
}

TEST_F(Cli, NonBinaryTreatmentExit2) {
  write("d.csv", "x,d,T,Y\n1,a,1,3\n1,a,0,1\n2,b,7,5\n2,b,0,2\n");
  write_config("d.csv");
  const CliResult r = run("match --config cfg.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("row(s) 3"), std::string::npos) << r.err;
}

TEST_F(Cli, DegenerateDataExit3) {
  write("d.csv", "x,d,T,Y\n1,a,1,3\n1,a,1,1\n");
  write_config("d.csv");
  EXPECT_EQ(run("estimate --config cfg.json").code, 3);
}

TEST_F(Cli, ConfigErrorsExit2) {
  write("cfg.json", R"({"input": "d.csv", "mystery": 1})");
  EXPECT_EQ(run("match --config cfg.json").code, 2);
  write("cfg.json", "{not json");
  EXPECT_EQ(run("match --config cfg.json").code, 2);
  EXPECT_EQ(run("match --config missing.json").code, 2);
  EXPECT_EQ(run("match").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, SimulateDeterministicAndRunnable) {
  ASSERT_EQ(run("simulate --scenario 1A --seed 7 --out a").code, 0);
  ASSERT_EQ(run("simulate --scenario 1A --seed 7 --out b").code, 0);
  EXPECT_EQ(slurp(dir_ / "a/scenario_1A.csv"), slurp(dir_ / "b/scenario_1A.csv"));
  ASSERT_EQ(run("simulate --scenario 1A --seed 8 --out c").code, 0);
  EXPECT_NE(slurp(dir_ / "a/scenario_1A.csv"), slurp(dir_ / "c/scenario_1A.csv"));
  // The emitted config drives an estimate run directly.
  const CliResult r = run("estimate --config a/config.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(slurp(dir_ / "a/results/estimate_report.json"));
  EXPECT_TRUE(rep["estimate"].contains("overall_cate"));
  EXPECT_GE(rep["imbalance"]["l1_pre"].get<double>(), 0.99);
}

TEST_F(Cli, UnknownScenarioExit2) {
  EXPECT_EQ(run("simulate --scenario 9Z").code, 2);
  EXPECT_EQ(run("benchmark --scenario 9Z --reps 2").code, 2);
}

TEST_F(Cli, BenchmarkSummary) {
  const CliResult r = run("benchmark --scenario 3B --reps 4 --out bench");
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = json::parse(slurp(dir_ / "bench/benchmark_summary.json"));
  EXPECT_TRUE(s["summary"]["L1m"].contains("mean"));
  EXPECT_TRUE(s["summary"]["bias"].contains("lower_95_ci"));
  EXPECT_TRUE(s["summary"]["bias"].contains("upper_95_ci"));
  EXPECT_EQ(s["replicates"], 4);
  EXPECT_TRUE(fs::exists(dir_ / "bench/benchmark_rows.csv"));
}

TEST_F(Cli, ImbalanceSubcommand) {
  write("d.csv", "x,d,T,Y\n1,a,1,3\n1,a,0,1\n2,b,1,5\n9,b,0,2\n");
  write_config("d.csv");
  ASSERT_EQ(run("imbalance --config cfg.json").code, 0);
  const json rep = json::parse(slurp(dir_ / "out/imbalance_report.json"));
  EXPECT_DOUBLE_EQ(rep["imbalance"]["l1"].get<double>(), 0.5);
}

TEST_F(Cli, LogLevelFromEnvironment) {
  write("d.csv", "x,d,T,Y\n1,a,1,3\n1,a,0,1\n2,b,1,5\n2,b,0,2\n");
  write_config("d.csv");
  const CliResult quiet = run("match --config cfg.json");
  EXPECT_EQ(quiet.err.find("info"), std::string::npos);
  const std::string cmd = "cd '" + dir_.string() + "' && TIM_LOG=info '" + kCli +
                          "' match --config cfg.json > /dev/null 2> info.txt";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(dir_ / "info.txt").find("info"), std::string::npos);
}
