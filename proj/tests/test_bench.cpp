// Copyright 2026 The metaopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "metaopt/bench/config.hpp"
#include "metaopt/bench/sweep.hpp"
#include "metaopt/bench/verify.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace metaopt::bench {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

/// A scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("metaopt_test_" + tag + "_" +
                                           std::to_string(::testing::UnitTest::GetInstance()->random_seed()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ExperimentConfig heavy_ball_full_grid() {
  ExperimentConfig cfg;
  cfg.grid = GridSpec::full();
  cfg.algorithms = {AlgorithmSpec{.label = "heavy_ball", .driver = DriverKind::HeavyBall}};
  return cfg;
}

TEST(Sweep, CrossProductCount) {
  const auto cfg = heavy_ball_full_grid();
  EXPECT_EQ(enumerate_jobs(cfg).size(), 6u * 6u * 10u * 5u);
  const auto result = run_sweep(cfg);
  ASSERT_EQ(result.records.size(), 1800u);
  std::set<std::string> ids;
  for (const auto& r : result.records) ids.insert(r.run_id);
  EXPECT_EQ(ids.size(), 1800u);
  EXPECT_EQ(result.best.size(), 5u);
}

TEST(Sweep, UnusedAxesAreNotSwept) {
  ExperimentConfig cfg;
  cfg.algorithms = {AlgorithmSpec{.label = "gd", .driver = DriverKind::GradientDescent},
                    AlgorithmSpec{.label = "ag", .driver = DriverKind::AdaGrad}};
  const auto jobs = enumerate_jobs(cfg);
  const std::size_t lr = cfg.grid.learning_rate.size(), init = cfg.grid.w_init_scale.size();
  EXPECT_EQ(jobs.size(), 5u * (lr + lr * init));
  for (const auto& j : jobs) EXPECT_FALSE(j.hyper.decay.has_value());
}

TEST(Sweep, SummaryIsDeterministicAcrossWorkerCounts) {
  const auto cfg = default_config();
  SweepOptions one;
  SweepOptions many;
  many.workers = 3;
  const std::string a = summary_json(cfg, run_sweep(cfg, one)).dump();
  const std::string b = summary_json(cfg, run_sweep(cfg, one)).dump();
  const std::string c = summary_json(cfg, run_sweep(cfg, many)).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Sweep, BestRunHasLowestCumulativeLoss) {
  const auto cfg = default_config();
  const auto result = run_sweep(cfg);
  for (const auto& b : result.best) {
    for (const auto& r : result.records) {
      if (r.label == b.label && r.seed == b.seed && std::isfinite(r.cumulative_loss)) {
        EXPECT_LE(b.cumulative_loss, r.cumulative_loss);
      }
    }
  }
}

TEST(RunRecord, JsonRoundTrip) {
  RunRecord r;
  r.run_id = "00ff";
  r.config_hash = "abcd";
  r.label = "meta_momentum";
  r.driver = "meta_momentum";
  r.seed = 3;
  r.hyper = {std::nullopt, 0.3, 0.01};
  r.final_gap = kNaN;
  r.cumulative_loss = kInf;
  r.cumulative_loss_averaged = 0.1 + 0.2;
  r.diverged = true;
  r.diverged_step = 17;
  EXPECT_EQ(record_from_json(nlohmann::json::parse(to_json(r).dump())), r);
}

TEST(Config, JsonRoundTrip) {
  auto cfg = default_config(true);
  cfg.problem.x0 = std::vector<double>{1.0, -2.0};
  const auto back = config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back).dump(), to_json(cfg).dump());
  EXPECT_EQ(config_hash(back), config_hash(cfg));
}

TEST(Config, UnknownRuleIsRejected) {
  const auto j = nlohmann::json::parse(R"({"algorithms": [{"driver": "convex", "rule": "bogus"}]})");
  EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(Config, UnknownFieldIsRejected) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"horizn": 10})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"grid": {"lr": [1]}})")), ConfigError);
}

TEST(Config, MissingGridAxesUseFullValues) {
  const auto cfg = config_from_json(nlohmann::json::parse(R"({"grid": {"learning_rate": [0.5]}})"));
  EXPECT_EQ(cfg.grid.learning_rate, std::vector<double>{0.5});
  EXPECT_EQ(cfg.grid.decay, kFullDecays);
}

TEST(Config, ValidationCatchesBadValues) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"horizon": 0})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"problem": {"seeds": [1, 1]}})")),
               ConfigError);
}

TEST(FigureData, OneCurveGroupPerAlgorithmAndSeed) {
  TempDir dir("figure");
  const auto cfg = default_config();
  SweepOptions opts;
  opts.output_dir = dir.path();
  const auto result = run_sweep(cfg, opts);
  emit_figure_data(result, dir.path(), dir.path() / "fig");
  const auto rows = lines(slurp(dir.path() / "fig" / "loss_per_iteration.csv"));
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.front(), "algorithm,seed,t,loss");
  std::set<std::string> groups;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto second_comma = rows[i].find(',', rows[i].find(',') + 1);
    groups.insert(rows[i].substr(0, second_comma));
  }
  EXPECT_EQ(groups.size(), 4u * 5u);
  EXPECT_EQ(rows.size(), 1u + 20u * static_cast<std::size_t>(cfg.horizon));
}

TEST(FigureData, SingleRunGivesSingleRow) {
  TempDir dir("single");
  ExperimentConfig cfg;
  cfg.problem.seeds = {0};
  cfg.grid.learning_rate = {0.5};
  cfg.algorithms = {AlgorithmSpec{.label = "gd", .driver = DriverKind::GradientDescent}};
  SweepOptions opts;
  opts.output_dir = dir.path();
  const auto result = run_sweep(cfg, opts);
  ASSERT_EQ(result.records.size(), 1u);
  emit_figure_data(result, dir.path(), dir.path() / "fig");
  EXPECT_EQ(lines(slurp(dir.path() / "fig" / "cumulative_loss_vs_lr.csv")).size(), 2u);
}

TEST(FigureData, RegeneratedFromSummaryIsByteIdentical) {
  TempDir dir("regen");
  const auto cfg = default_config();
  SweepOptions opts;
  opts.output_dir = dir.path();
  const auto result = run_sweep(cfg, opts);
  write_sweep(dir.path(), cfg, result);
  emit_figure_data(result, dir.path(), dir.path() / "first");

  const auto reloaded = sweep_from_summary(nlohmann::json::parse(slurp(dir.path() / "summary.json")));
  EXPECT_EQ(reloaded.records, result.records);
  emit_figure_data(reloaded, dir.path(), dir.path() / "second");
  for (const char* name : {"loss_per_iteration.csv", "cumulative_loss_vs_lr.csv"}) {
    EXPECT_EQ(slurp(dir.path() / "first" / name), slurp(dir.path() / "second" / name)) << name;
  }
}

TEST(Verify, MetaMomentumMatchesTunedHeavyBall) {
  const auto r = verify_meta_vs_baseline(VerifySpec{});
  EXPECT_GE(r.data.at("momentum_wins").get<int>(), tol::kMetaVsBaselineWins);
  EXPECT_EQ(r.data.at("runs").get<std::size_t>(), 5580u);
}

TEST(Verify, OffScheduleBetaIsNotApplicable) {
  VerifySpec spec;
  spec.seeds = {0, 1};
  spec.dims = {2};
  spec.mg_beta_multiplier = 10.0;
  const auto r = verify_mg_bound(spec);
  EXPECT_EQ(r.status, CriterionStatus::NotApplicable) << r.detail;
}

TEST(Verify, SlowBoundPassesOnDefaults) {
  VerifySpec spec;
  spec.dims = {2};
  EXPECT_EQ(verify_mg_bound(spec).status, CriterionStatus::Pass);
}

#ifdef METAOPT_BENCH_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + METAOPT_BENCH_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ConfigErrorsExitWithTwo) {
  TempDir dir("cli");
  const fs::path bad = dir.path() / "bad.json";
  std::ofstream(bad) << R"({"algorithms": [{"driver": "convex", "rule": "bogus"}]})";
  EXPECT_EQ(run_cli("sweep --config " + bad.string() + " --out " + (dir.path() / "o").string()), 2);
  EXPECT_EQ(run_cli("sweep --config " + (dir.path() / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
}

TEST(Cli, SweepSucceeds) {
  TempDir dir("cli_ok");
  const fs::path cfg = dir.path() / "one.json";
  std::ofstream(cfg) << R"({"problem": {"seeds": [0]}, "grid": {"learning_rate": [0.5]},
                           "algorithms": [{"driver": "gradient_descent"}]})";
  EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + (dir.path() / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "o" / "summary.json"));
}
#endif

}  // namespace
}  // namespace metaopt::bench
