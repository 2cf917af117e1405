#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rail/harness.hpp"

using namespace rail;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExperimentConfig small_config() {
  return config_from_json(Json::parse(R"({
    "name": "small", "env": "cartpole", "learners": ["rail-dw", "passive", "unif-rand"],
    "budget": 6, "trials": 2, "seed": 5, "horizon": 60, "eval_episodes": 3, "eval_interval": 3
  })"));
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rail-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = config_from_json(Json::parse(R"({"env": "cartpole", "learners": ["rail-dw"]})"));
  EXPECT_EQ(c.trials, 10u);
  EXPECT_EQ(c.budget, 150u);
  EXPECT_EQ(c.learner.budget, 150u);
  EXPECT_EQ(c.env_options.seed, 1u);
  const auto s = config_from_json(Json::parse(R"({"env": "seqlabel-L2", "learners": ["passive"], "seed": 9})"));
  EXPECT_EQ(s.trials, 5u);
  EXPECT_EQ(s.env_options.seed, 9u);
}

TEST(Config, Errors) {
  for (const char* bad : {
           R"({"env": "cartpole", "learners": ["rail-dw"], "budjet": 10})",
           R"({"env": "cartpole", "learners": ["dagger"]})",
           R"({"env": "cartpole", "learners": []})",
           R"({"env": "cartpole", "learners": ["passive", "passive"]})",
           R"({"learners": ["passive"]})",
           R"({"env": "cartpole", "learners": ["passive"], "budget": 0})",
           R"({"env": "cartpole", "learners": ["passive"], "budget": "ten"})",
           R"({"env": "cartpole", "learners": ["passive"], "env_options": {"gravity": 1}})",
           R"({"env": "cartpole", "learners": ["passive"], "learner": {"K": 3}})",
       })
    EXPECT_THROW(config_from_json(Json::parse(bad)), ConfigError) << bad;
  auto unknown_env = config_from_json(Json::parse(R"({"env": "bicycle", "learners": ["passive"]})"));
  EXPECT_THROW(run_experiment(unknown_env), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  const auto c = small_config();
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back).dump(), config_to_json(c).dump());
}

TEST(Config, LoadAcceptsComments) {
  const auto dir = scratch("cfg");
  std::filesystem::create_directories(dir);
  write_text(dir / "c.json", "// demo\n{\"env\": \"chain-3\", \"learners\": [\"passive\"]}\n");
  EXPECT_EQ(load_config(dir / "c.json").env, "chain-3");
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  write_text(dir / "bad.json", "{");
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
}

TEST(EvaluationPoints, IncludeZeroAndBudget) {
  EXPECT_EQ(evaluation_points(10, 5), (std::vector<std::size_t>{0, 5, 10}));
  EXPECT_EQ(evaluation_points(7, 5), (std::vector<std::size_t>{0, 5, 7}));
  EXPECT_EQ(evaluation_points(1, 5), (std::vector<std::size_t>{0, 1}));
}

TEST(Experiment, OneTrialBudgetOne) {
  auto c = config_from_json(Json::parse(R"({"env": "cartpole", "learners": ["rail-dw"], "budget": 1,
                                            "trials": 1, "horizon": 40, "eval_episodes": 2})"));
  const auto r = run_experiment(c);
  ASSERT_EQ(r.curves.size(), 1u);
  const auto& rows = r.curves[0].rows;
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].queries, 0u);
  EXPECT_EQ(rows[1].queries, 1u);
  for (const auto& row : rows) {
    EXPECT_EQ(row.values.size(), 1u);
    EXPECT_EQ(row.std_error, 0.0);
  }
  EXPECT_EQ(r.runs[0][0].queries_used, 1u);
}

TEST(Experiment, QueryCountMatchesBudget) {
  const auto r = run_experiment(small_config());
  for (std::size_t li = 0; li < r.curves.size(); ++li)
    for (const auto& run : r.runs[li]) {
      EXPECT_EQ(run.queries_used, 6u) << r.curves[li].learner;
      EXPECT_EQ(run.queries.size(), 6u);
    }
  EXPECT_EQ(r.expert.values.size(), 2u);
  EXPECT_DOUBLE_EQ(r.expert.mean, 60.0);
}

TEST(Experiment, SummaryMatchesTrialValues) {
  const auto r = run_experiment(small_config());
  for (const auto& c : r.curves)
    for (const auto& row : c.rows) {
      ASSERT_EQ(row.values.size(), 2u);
      const double mean = (row.values[0] + row.values[1]) / 2.0;
      EXPECT_DOUBLE_EQ(row.mean, mean);
      // two values: sd / sqrt(2) = |a - b| / 2
      EXPECT_NEAR(row.std_error, std::abs(row.values[0] - row.values[1]) / 2.0, 1e-12);
    }
}

TEST(Experiment, CsvIsByteIdenticalAcrossRunsAndThreadCounts) {
  auto c = small_config();
  c.threads = 1;
  const auto a = run_experiment(c);
  c.threads = 3;
  const auto b = run_experiment(c);
  const auto da = scratch("a"), db = scratch("b");
  write_results(a, da);
  write_results(b, db);
  for (const auto& l : c.learners) {
    const auto fa = slurp(da / (l + ".csv")), fb = slurp(db / (l + ".csv"));
    EXPECT_FALSE(fa.empty());
    EXPECT_EQ(fa, fb) << l;
  }
  auto ja = Json::parse(slurp(da / "config.json")), jb = Json::parse(slurp(db / "config.json"));
  ja.erase("threads");
  jb.erase("threads");
  EXPECT_EQ(ja.dump(), jb.dump());
}

TEST(Csv, FormatAndRoundTrip) {
  LearningCurve curve{"rail-dw", {{0, 1.5, 0.5, {1.0, 2.0}}, {5, 0.1, 0.0, {0.1, 0.1}}}};
  const auto text = curve_to_csv(curve);
  EXPECT_EQ(text,
            "learner,queries,mean,stderr,trial_0,trial_1\n"
            "rail-dw,0,1.5,0.5,1,2\n"
            "rail-dw,5,0.10000000000000001,0,0.10000000000000001,0.10000000000000001\n");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const auto back = curve_from_csv(text);
  EXPECT_EQ(back.learner, "rail-dw");
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[1].mean, 0.1);
  EXPECT_EQ(back.rows[0].values, (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(curve_from_csv("x,y\n"), ConfigError);
}

TEST(Csv, OneFilePerLearnerPlusConfig) {
  const auto r = run_experiment(small_config());
  const auto dir = scratch("files");
  const auto files = write_results(r, dir);
  EXPECT_EQ(files.size(), 4u);
  const auto side = Json::parse(slurp(dir / "config.json"));
  EXPECT_EQ(side["env"], "cartpole");
  EXPECT_EQ(side["expert"]["trial_values"].size(), 2u);
  const auto curve = curve_from_csv(slurp(dir / "passive.csv"));
  EXPECT_EQ(curve.rows.size(), 3u);
}

TEST(Policies, WrittenPolicyReplaysTheTrial) {
  const auto r = run_experiment(small_config());
  const auto dir = scratch("pol");
  write_policies(r, dir);
  std::ifstream in(dir / "rail-dw-trial1.policy");
  ASSERT_TRUE(in);
  EXPECT_EQ(load_policy(in), r.runs[0][1].policy);
}

TEST(Seqlabel, ReportsAccuracyInUnitInterval) {
  auto c = config_from_json(Json::parse(R"({"env": "seqlabel-L1", "learners": ["passive"], "budget": 10,
                                            "trials": 1, "eval_episodes": 5, "eval_interval": 10,
                                            "env_options": {"corpus_words": 10, "eval_words": 10}})"));
  const auto r = run_experiment(c);
  for (const auto& row : r.curves[0].rows) {
    EXPECT_GE(row.mean, 0.0);
    EXPECT_LE(row.mean, 1.0);
  }
  EXPECT_DOUBLE_EQ(r.expert.mean, 1.0);
}
