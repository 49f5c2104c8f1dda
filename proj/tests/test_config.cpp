#include "densreg/config.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

using namespace densreg;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c = load_config("");
  const nlohmann::json j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  EXPECT_EQ(c.mcmc.J0, McmcSettings{}.J0);
  EXPECT_EQ(c.links.size(), 3u);
}

TEST(Config, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Config, HashIgnoresThreadsOnly) {
  RunConfig a = load_config("");
  RunConfig b = a;
  b.threads = 7;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = a.seed + 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, CustomLinksAndStopRule) {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "data": {"numeric": 1, "categorical_levels": [2]},
    "links": [{"kind": "floor_exp"}, {"kind": "floor_exp"}, {"kind": "sum_constrained", "base": 1}, {"kind": "sign"}],
    "smc": {"stop_rule": "cess", "delta": 2.5, "I": 3},
    "mcmc": {"J0": 5, "burnin": 10, "iters": 20, "thin": 2},
    "seed": 11
  })");
  const RunConfig c = config_from_json(j);
  ASSERT_EQ(c.links.size(), 4u);
  EXPECT_EQ(c.links[2].kind, LinkKind::SumConstrainedFloorExp);
  EXPECT_EQ(c.links[2].base_dim, 0);
  EXPECT_EQ(c.smc.rule.kind, StopKind::CESS);
  EXPECT_DOUBLE_EQ(c.smc.rule.delta, 2.5);
  EXPECT_EQ(c.smc.rule.I, 3);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
}

TEST(Config, InvalidValuesAreRejected) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"links": [{"kind": "cubic"}]})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"links": "nope"})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"smc": {"stop_rule": "kl"}})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"mcmc": {"J0": 0}})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"mcmc": {"iters": "many"}})")), ValidationError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ValidationError);
}

TEST(Config, MalformedFileIsAValidationError) {
  const std::string path = ::testing::TempDir() + "densreg_bad_config.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  EXPECT_THROW(load_config(path), ValidationError);
  std::remove(path.c_str());
}

TEST(Config, PointsFile) {
  const std::string path = ::testing::TempDir() + "densreg_points.csv";
  {
    std::ofstream out(path);
    out << "# comment\nx1,x2,x3\n20,1,2\n25,3,1\n";
  }
  const auto pts = load_points(path, simulation_schema());
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_DOUBLE_EQ(pts[1].numeric[0], 25.0);
  EXPECT_EQ(pts[1].categories, (std::vector<int>{3, 1}));
  {
    std::ofstream out(path);
    out << "x1,x2,x3\n20,4,2\n";
  }
  EXPECT_THROW(load_points(path, simulation_schema()), ValidationError);
  std::remove(path.c_str());
}
