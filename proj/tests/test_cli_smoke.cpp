// Runs the command-line examples from README.md and checks their outputs and
// exit codes.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "rkhs_logit.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct DocStep {
  enum Kind { Command, File } kind;
  std::string name;  // file name for File steps
  std::string text;  // command line or file contents
};

// ```sh blocks: lines starting with "rkhs-logit ". ```json blocks preceded by
// "<!-- file: NAME -->": written to NAME.
std::vector<DocStep> readme_steps() {
  std::istringstream in(slurp(RKHS_LOGIT_README));
  std::vector<DocStep> steps;
  std::string line, pending_file, fence;
  std::string body;
  const std::regex marker(R"(<!--\s*file:\s*(\S+)\s*-->)");
  while (std::getline(in, line)) {
    if (fence.empty()) {
      std::smatch m;
      if (std::regex_search(line, m, marker)) pending_file = m[1];
      if (line.rfind("```", 0) == 0) {
        fence = line.substr(3);
        body.clear();
      }
      continue;
    }
    if (line.rfind("```", 0) == 0) {
      if (fence == "json" && !pending_file.empty()) steps.push_back({DocStep::File, pending_file, body});
      pending_file.clear();
      fence.clear();
      continue;
    }
    if (fence == "sh" && line.rfind("rkhs-logit ", 0) == 0) steps.push_back({DocStep::Command, "", line});
    body += line + "\n";
  }
  return steps;
}

class CliSmoke : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rkhs_logit_smoke_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& log = "log.txt") const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" + std::string(RKHS_LOGIT_CLI) + "' " + args + " > " +
                            log + " 2> err_" + log;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliSmoke, ReadmeExamplesRun) {
  const auto steps = readme_steps();
  int commands = 0;
  for (const auto& s : steps) {
    if (s.kind == DocStep::File) {
      std::ofstream(dir_ / s.name) << s.text;
      continue;
    }
    ++commands;
    const std::string args = s.text.substr(std::string("rkhs-logit ").size());
    const std::string log = "cmd" + std::to_string(commands) + ".txt";
    EXPECT_EQ(run(args, log), 0) << s.text << "\n" << slurp(dir_ / ("err_" + log));
  }
  ASSERT_GE(commands, 3);

  // simulate: header plus 20 rows.
  const rkhs_logit::FunctionalDataset d = rkhs_logit::load_csv(dir_ / "d.csv");
  EXPECT_EQ(d.size(), 20u);
  EXPECT_EQ(d.grid_size(), 101u);
  // fit: a PointModel JSON.
  const rkhs_logit::PointModel m = rkhs_logit::model_from_json(rkhs_logit::Json::parse(slurp(dir_ / "model.json")));
  EXPECT_GE(m.size(), 1u);
  EXPECT_LE(m.size(), 10u);
  // benchmark: CSV and JSON summary in results/.
  int csv = 0, json = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "results")) {
    csv += e.path().extension() == ".csv";
    json += e.path().extension() == ".json";
  }
  EXPECT_GE(csv, 1);
  EXPECT_GE(json, 1);
}

TEST_F(CliSmoke, SameInvocationSameBytes) {
  ASSERT_EQ(run("simulate --generator ou --n 15 --grid 21 --seed 3 --out a.csv"), 0);
  ASSERT_EQ(run("simulate --generator ou --n 15 --grid 21 --seed 3 --out b.csv"), 0);
  EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(dir_ / "b.csv"));
  const std::string bench =
      "benchmark --seed 4 --generators bm_fin --methods knn5,rk --replications 3 --n-train 30 --n-test 10 "
      "--grid 21 --pmax 3 --folds 3 --no-timing --stamp fixed ";
  ASSERT_EQ(run(bench + "--jobs 1 --out r1"), 0);
  ASSERT_EQ(run(bench + "--jobs 3 --out r2"), 0);
  EXPECT_EQ(slurp(dir_ / "r1/benchmark_fixed.csv"), slurp(dir_ / "r2/benchmark_fixed.csv"));
  EXPECT_EQ(slurp(dir_ / "r1/benchmark_fixed.json"), slurp(dir_ / "r2/benchmark_fixed.json"));
}

TEST_F(CliSmoke, PredictMatchesModel) {
  ASSERT_EQ(run("simulate --generator bm_fin --n 40 --grid 21 --seed 5 --out d.csv"), 0);
  ASSERT_EQ(run("fit --method rkhs-mm --p 2 --seed 5 --data d.csv --out m.json"), 0);
  ASSERT_EQ(run("predict --model m.json --data d.csv --out p.csv"), 0);
  std::istringstream in(slurp(dir_ / "p.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "probability,label");
  int rows = 0;
  while (std::getline(in, line)) {
    const double p = std::stod(line.substr(0, line.find(',')));
    EXPECT_EQ(line.back() - '0', p > 0.5 ? 1 : 0);
    ++rows;
  }
  EXPECT_EQ(rows, 40);
}

TEST_F(CliSmoke, ExitCodes) {
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("simulate --generator bm_fin --n 5 --bogus 1 --seed 1"), 1);
  EXPECT_EQ(run("simulate --generator bm_fin --n 5"), 1);       // no seed
  EXPECT_EQ(run("simulate --generator nope --n 5 --seed 1"), 1);
  EXPECT_EQ(run("benchmark --replications 1"), 1);              // no seed
  std::ofstream(dir_ / "bad.csv") << "y,t_0.5\n1,abc\n";
  EXPECT_EQ(run("fit --seed 1 --data bad.csv"), 1);
  std::ofstream(dir_ / "cfg.json") << R"({"seed": 1, "unknown_key": 3})";
  EXPECT_EQ(run("benchmark --config cfg.json"), 1);
  std::ofstream(dir_ / "norms.json") << R"({"seed": 1, "experiment": "benchmark"})";
  EXPECT_EQ(run("norms --config norms.json"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(CliSmoke, InlineFlagsOverrideConfig) {
  std::ofstream(dir_ / "cfg.json") << R"({"seed": 1, "generators": ["bm_fin"], "methods": ["knn5"],
    "replications": 5, "n_train": 30, "n_test": 10, "grid_size": 21, "folds": 3})";
  ASSERT_EQ(run("benchmark --config cfg.json --replications 2 --no-timing --stamp s --out r"), 0);
  const auto j = rkhs_logit::Json::parse(slurp(dir_ / "r/benchmark_s.json"));
  EXPECT_EQ(j.at("config").at("replications"), 2);
  EXPECT_EQ(j.at("config").at("n_train"), 30);
  EXPECT_EQ(j.at("cells").at(0).at("count"), 2);
}

TEST_F(CliSmoke, JobsEnvironmentFallback) {
  const std::string bench =
      "benchmark --seed 2 --generators ou --methods knn5 --replications 4 --n-train 20 --n-test 10 --grid 11 "
      "--folds 2 --no-timing --stamp e ";
  ASSERT_EQ(run(bench + "--out a"), 0);
  const std::string cmd = "cd '" + dir_.string() + "' && RKHS_LOGIT_JOBS=3 '" + std::string(RKHS_LOGIT_CLI) +
                          "' " + bench + "--out b > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(slurp(dir_ / "a/benchmark_e.csv"), slurp(dir_ / "b/benchmark_e.csv"));
  const std::string bad = "cd '" + dir_.string() + "' && RKHS_LOGIT_JOBS=zero '" + std::string(RKHS_LOGIT_CLI) +
                          "' " + bench + "--out c > /dev/null 2>&1";
  const int status = std::system(bad.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 1);
}
