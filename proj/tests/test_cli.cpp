#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = DENSREG_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workspace {
  fs::path root;
  fs::path config;

  Workspace() {
    root = fs::path(::testing::TempDir()) / "densreg_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    config = root / "config.json";
    std::ofstream(config) << R"({
      "data": {"n": 80},
      "mcmc": {"J0": 2, "burnin": 40, "iters": 80, "thin": 8},
      "smc": {"max_extra_components": 2},
      "predict": {"grid_points": 32, "mc_draws": 200}
    })";
    std::ofstream(root / "points.csv") << "x1,x2,x3\n20,1,2\n27,2,1\n";
  }
  ~Workspace() { fs::remove_all(root); }

  std::string common(const std::string& dir) const {
    return "--config " + config.string() + " --out-dir " + (root / dir).string();
  }
};

}  // namespace

TEST(Cli, MissingDataFileIsAValidationError) {
  const Workspace w;
  EXPECT_EQ(run("fit " + w.common("a") + " --data " + (w.root / "missing.csv").string()), 2);
  EXPECT_EQ(run("fit " + w.common("a") + " --stop-rule bogus"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST(Cli, SameSeedGivesIdenticalFiles) {
  const Workspace w;
  ASSERT_EQ(run("simulate " + w.common("sim") + " --seed 7"), 0);
  const std::string data = (w.root / "sim" / "data.csv").string();
  ASSERT_TRUE(fs::exists(data));
  ASSERT_EQ(run("fit " + w.common("a") + " --seed 7 --threads 1 --data " + data), 0);
  ASSERT_EQ(run("fit " + w.common("b") + " --seed 7 --threads 2 --data " + data), 0);
  for (const char* f : {"particles.json", "trace.csv"}) {
    EXPECT_EQ(slurp(w.root / "a" / f), slurp(w.root / "b" / f)) << f;
  }
  ASSERT_EQ(run("score " + w.common("a") + " --seed 7 --threads 1 --data " + data), 0);
  ASSERT_EQ(run("score " + w.common("b") + " --seed 7 --threads 2 --data " + data), 0);
  EXPECT_EQ(slurp(w.root / "a" / "metrics.json"), slurp(w.root / "b" / "metrics.json"));
}

TEST(Cli, PredictCheckAndDescribe) {
  const Workspace w;
  ASSERT_EQ(run("fit " + w.common("run") + " --seed 3"), 0);
  EXPECT_EQ(run("predict " + w.common("run") + " --seed 3 --points " + (w.root / "points.csv").string()), 0);
  const std::string pred = slurp(w.root / "run" / "predictions.csv");
  EXPECT_NE(pred.find("config_hash="), std::string::npos);
  EXPECT_NE(pred.find("censoring_z1"), std::string::npos);
  EXPECT_NE(pred.find("success_z3"), std::string::npos);
  EXPECT_EQ(run("check " + w.common("run") + " --seed 3"), 0);
  EXPECT_TRUE(fs::exists(w.root / "run" / "pvalues.csv"));
  EXPECT_TRUE(fs::exists(w.root / "run" / "km.csv"));
  EXPECT_EQ(run("describe " + w.common("run")), 0);
  EXPECT_EQ(run("predict " + w.common("run") + " --points " + (w.root / "nope.csv").string()), 2);
}
