#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ceqln/io.hpp"

namespace ceqln {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ceqln_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(CEQLN_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    CliRun r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  // generate + train with a short epoch budget; returns the train output dir.
  fs::path trained(const std::string& task, int epochs, const std::string& name = "train") const {
    const fs::path data = path(task);
    EXPECT_EQ(run("generate --task " + task + " --seed 1 --out " + data.string()).status, 0);
    const fs::path out = path(name);
    const CliRun r = run("train --config " + (data / "config.json").string() + " --dataset " +
                      (data / "dataset.csv").string() + " --constraints " + (data / "constraints.json").string() +
                      " --epochs " + std::to_string(epochs) + " --out " + out.string());
    EXPECT_EQ(r.status, 0) << r.err;
    return out;
  }

  fs::path dir_;
};

TEST_F(CliTest, TrainWritesArtifacts) {
  const fs::path out = trained("toy1d", 3);
  for (const char* f : {"loss.csv", "model.json", "trajectory_r1.csv", "metrics.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const std::string loss = slurp(out / "loss.csv");
  EXPECT_EQ(loss.rfind("epoch,loss,best_loss,constraint_mse,inequality_violation\n", 0), 0u);
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 4);
  const Json metrics = Json::parse(slurp(out / "metrics.json"));
  EXPECT_TRUE(metrics.contains("best_loss"));
  EXPECT_NO_THROW(read_dataset_csv((out / "trajectory_r1.csv").string()));
}

TEST_F(CliTest, TrainIsByteDeterministic) {
  const fs::path a = trained("toy1d", 5, "a");
  const fs::path b = trained("toy1d", 5, "b");
  EXPECT_EQ(slurp(a / "loss.csv"), slurp(b / "loss.csv"));
  EXPECT_EQ(slurp(a / "model.json"), slurp(b / "model.json"));
}

TEST_F(CliTest, GenerateIsByteDeterministic) {
  ASSERT_EQ(run("generate --task cleaning3d --noise 0.01 --seed 4 --out " + path("a").string()).status, 0);
  ASSERT_EQ(run("generate --task cleaning3d --noise 0.01 --seed 4 --out " + path("b").string()).status, 0);
  for (const char* f : {"dataset.csv", "constraints.json", "config.json"}) {
    EXPECT_EQ(slurp(path("a") / f), slurp(path("b") / f)) << f;
  }
  const TrajectoryDataset clean = read_dataset_csv((path("a") / "dataset.csv").string());
  EXPECT_GT(clean.size(), 0);
}

TEST_F(CliTest, MalformedJsonIsExitTwoWithOffset) {
  ASSERT_EQ(run("generate --task toy1d --out " + path("d").string()).status, 0);
  std::ofstream(path("bad.json")) << "{\"beta\": 3,, }";
  const CliRun r = run("train --config " + path("bad.json").string() + " --dataset " + (path("d") / "dataset.csv").string() +
                    " --constraints " + (path("d") / "constraints.json").string() + " --out " + path("o").string());
  EXPECT_EQ(r.status, 2);
  const Json err = Json::parse(r.err).at("error");
  EXPECT_EQ(err.at("exit_code"), 2);
  EXPECT_EQ(err.at("byte_offset"), 12);
  EXPECT_NE(err.at("file").get<std::string>().find("bad.json"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsAreExitTwo) {
  EXPECT_EQ(run("train --no-such-flag").status, 2);
  EXPECT_EQ(run("train").status, 2);
  const CliRun missing = run("train --config /nonexistent.json --dataset x --constraints y");
  EXPECT_EQ(missing.status, 2);
  EXPECT_EQ(Json::parse(missing.err).at("error").at("kind"), "input_error");
}

TEST_F(CliTest, AllInfeasibleDrawsAreExitThree) {
  ASSERT_EQ(run("generate --task toy1d --out " + path("d").string()).status, 0);
  std::ofstream(path("bad.json")) << R"([{"r": 1, "equalities": [{"t": 0.5, "dim": 0, "value": 1}],
                                          "inequalities": [{"t": 0.5, "dim": 0, "lower": "-inf", "upper": 0}]}])";
  const CliRun r = run("train --config " + (path("d") / "config.json").string() + " --dataset " +
                    (path("d") / "dataset.csv").string() + " --constraints " + path("bad.json").string() + " --out " +
                    path("o").string());
  EXPECT_EQ(r.status, 3);
  const Json err = Json::parse(r.err).at("error");
  EXPECT_EQ(err.at("kind"), "initialization_failed");
  EXPECT_NE(err.at("message").get<std::string>().find("initialization failed"), std::string::npos);
  EXPECT_NE(err.at("message").get<std::string>().find("widening"), std::string::npos);
}

TEST_F(CliTest, AdaptTrainingSetMatchesTrainOutput) {
  const fs::path out = trained("toy1d", 3);
  const fs::path data = path("toy1d");
  const CliRun r = run("adapt --model " + (out / "model.json").string() + " --dataset " + (data / "dataset.csv").string() +
                    " --constraints " + (data / "constraints.json").string() + " --out " + path("adapted").string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(path("adapted") / "trajectory_r1.csv"), slurp(out / "trajectory_r1.csv"));
}

TEST_F(CliTest, AdaptHeldOutAssemblySetPasses) {
  const fs::path out = trained("assembly3d", 1);
  const fs::path data = path("assembly3d");
  const CliRun r = run("adapt --model " + (out / "model.json").string() + " --dataset " + (data / "dataset.csv").string() +
                    " --constraints " + (data / "heldout.json").string() + " --out " + path("adapted").string());
  ASSERT_EQ(r.status, 0) << r.err;
  const Json report = Json::parse(slurp(path("adapted") / "residuals.json"));
  EXPECT_TRUE(report.at("pass").get<bool>());
  EXPECT_EQ(report.at("sets")[0].at("r"), 5);
}

TEST_F(CliTest, AdaptInfeasibleSetIsExitThree) {
  const fs::path out = trained("toy1d", 1);
  std::ofstream(path("bad.json")) << R"({"r": 2, "equalities": [{"t": 0.5, "dim": 0, "value": 1}],
                                          "inequalities": [{"t": 0.5, "dim": 0, "lower": 2, "upper": "inf"}]})";
  const CliRun r = run("adapt --model " + (out / "model.json").string() + " --dataset " +
                    (path("toy1d") / "dataset.csv").string() + " --constraints " + path("bad.json").string() +
                    " --out " + path("adapted").string());
  EXPECT_EQ(r.status, 3);
  EXPECT_EQ(Json::parse(r.err).at("error").at("constraint_set"), 2);
}

TEST_F(CliTest, SweepWritesHundredRows) {
  const CliRun r = run("sweep --family fourier --out " + path("sweep.csv").string());
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string csv = slurp(path("sweep.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 101);
  EXPECT_EQ(csv.find("infeasible"), std::string::npos);
  EXPECT_EQ(run("sweep --family wavelet").status, 2);
}

TEST_F(CliTest, VerifyFixturePrintsFourResiduals) {
  const CliRun r = run("verify-appendix");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  EXPECT_NE(r.out.find("pass"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_EQ(run("verify-appendix --tolerance 0.01").status, 4);
}

TEST_F(CliTest, ExportEquationsParses) {
  const fs::path out = trained("toy1d", 1);
  const CliRun r = run("export-equations --model " + (out / "model.json").string() + " --digits 4");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("f0 = ", 0), 0u);
  EXPECT_NE(r.out.find("\nphi5 = "), std::string::npos);
}

TEST_F(CliTest, MetricsReportsEveryKey) {
  const fs::path out = trained("pickplace3d", 1);
  const fs::path data = path("pickplace3d");
  std::string args = "metrics --dataset " + (data / "dataset.csv").string() + " --constraints " +
                     (data / "constraints.json").string();
  for (int r = 1; r <= 3; ++r) args += " --trajectory " + (out / ("trajectory_r" + std::to_string(r) + ".csv")).string();
  const CliRun r = run(args);
  ASSERT_EQ(r.status, 0) << r.err;
  const Json m = Json::parse(r.out);
  for (const char* key : {"mse_shape", "mse_const", "mse1", "mse1_sum", "mse2", "mse3", "mse4"}) {
    EXPECT_TRUE(m.contains(key)) << key;
  }
  EXPECT_LE(json_number(m.at("mse2"), "mse2"), 1e-12);
  EXPECT_LE(json_number(m.at("mse4"), "mse4"), 1e-12);
}

}  // namespace
}  // namespace ceqln
