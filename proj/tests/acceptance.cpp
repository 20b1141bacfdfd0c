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

// Acceptance suite: one PASS/FAIL line per criterion, runtime budgets
// included. Exit status is non-zero if any criterion fails.

#include "metaopt/bench/config.hpp"
#include "metaopt/bench/verify.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <string>

namespace {

namespace fs = std::filesystem;
using metaopt::bench::CriterionResult;
using metaopt::bench::CriterionStatus;
using metaopt::bench::make_result;

struct Criterion {
  int id;
  double budget_seconds;  ///< <= 0: no budget
  std::function<CriterionResult()> run;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

#ifdef METAOPT_BENCH_PATH
/// Runs `metaopt_bench verify` twice into separate directories and compares
/// the JSON bundles and the printed tables byte for byte.
CriterionResult determinism() {
  CriterionResult out = make_result(12, "verify output is deterministic");
  const fs::path root = fs::temp_directory_path() / "metaopt_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::string bundles[2], tables[2];
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = root / ("run" + std::to_string(k));
    const fs::path table = root / ("table" + std::to_string(k) + ".txt");
    const std::string cmd = std::string("\"") + METAOPT_BENCH_PATH + "\" verify --out \"" +
                            dir.string() + "\" > \"" + table.string() + "\" 2>&1";
    codes[k] = std::system(cmd.c_str());
    bundles[k] = read_file(dir / "verify.json");
    tables[k] = read_file(table);
  }
  const bool ok = !bundles[0].empty() && bundles[0] == bundles[1] && tables[0] == tables[1] &&
                  codes[0] == codes[1];
  out.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  out.detail = "verify.json " + std::to_string(bundles[0].size()) + " bytes, " +
               (bundles[0] == bundles[1] ? "identical" : "different") + "; table " +
               (tables[0] == tables[1] ? "identical" : "different");
  fs::remove_all(root);
  return out;
}
#endif

}  // namespace

int main() {
  using namespace metaopt::bench;
  const ExperimentConfig cfg = default_config();
  const VerifySpec& spec = cfg.verify;

  const Criterion criteria[] = {
      {1, 5.0, [&] { return verify_heavy_ball_reduction(spec); }},
      {2, 10.0, [&] { return verify_nesterov_reduction(spec); }},
      {3, 10.0, [&] { return verify_mg_bound(spec); }},
      {4, 10.0, [&] { return verify_omg_bound(spec); }},
      {5, 30.0, [&] { return verify_rate_separation(spec); }},
      {6, 0.0, [&] { return verify_ftrl_regret(spec); }},
      {7, 0.0, [&] { return verify_online_to_batch(spec); }},
      {8, 5.0, [&] { return verify_isomorphism(spec); }},
      {9, 0.0, [&] { return verify_jacobians(spec); }},
      {10, 180.0, [&] { return verify_meta_vs_baseline(spec); }},
      {11, 60.0, [&] { return verify_surrogate(spec); }},
#ifdef METAOPT_BENCH_PATH
      {12, 0.0, [] { return determinism(); }},
#endif
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.id = c.id;
      r.name = "exception";
      r.status = CriterionStatus::Fail;
      r.detail = e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = c.budget_seconds <= 0.0 || seconds <= c.budget_seconds;
    const bool pass = r.status == CriterionStatus::Pass && in_budget;
    failures += !pass;
    std::printf("%s criterion %2d: %s | %s | %.2fs%s\n", pass ? "PASS" : "FAIL", c.id,
                r.name.c_str(), r.detail.c_str(), seconds,
                in_budget ? "" : " (over budget)");
  }
#ifndef METAOPT_BENCH_PATH
  std::printf("FAIL criterion 12: benchmark CLI not built\n");
  ++failures;
#endif
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
