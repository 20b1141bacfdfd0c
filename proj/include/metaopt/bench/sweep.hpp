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

#pragma once

#include "metaopt/analysis.hpp"
#include "metaopt/bench/config.hpp"
#include "metaopt/drivers.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace metaopt::bench {

/// One grid point. Axes the driver does not consume are empty.
struct Hyper {
  std::optional<double> learning_rate;
  std::optional<double> w_init_scale;
  std::optional<double> decay;

  double lr_or(double fallback) const { return learning_rate.value_or(fallback); }
  double init_or(double fallback) const { return w_init_scale.value_or(fallback); }
  double decay_or(double fallback) const { return decay.value_or(fallback); }

  /// Lexicographic key; empty axes sort first.
  auto key() const {
    auto k = [](const std::optional<double>& v) { return v ? *v : -kInf; };
    return std::make_tuple(k(learning_rate), k(w_init_scale), k(decay));
  }

  bool operator==(const Hyper&) const = default;
};

inline nlohmann::json to_json(const Hyper& h) {
  nlohmann::json out = nlohmann::json::object();
  if (h.learning_rate) out["learning_rate"] = *h.learning_rate;
  if (h.w_init_scale) out["w_init_scale"] = *h.w_init_scale;
  if (h.decay) out["decay"] = *h.decay;
  return out;
}

inline Hyper hyper_from_json(const nlohmann::json& j) {
  Hyper h;
  if (j.contains("learning_rate")) h.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("w_init_scale")) h.w_init_scale = j.at("w_init_scale").get<double>();
  if (j.contains("decay")) h.decay = j.at("decay").get<double>();
  return h;
}

/// Reals in persisted records: finite values as numbers, others as "nan"/"inf"/"-inf".
inline nlohmann::json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

inline double real_from_json(const nlohmann::json& j) {
  return j.is_string() ? parse_real(j.get<std::string>()) : j.get<double>();
}

struct RunRecord {
  std::string run_id;
  std::string config_hash;
  std::string label;
  std::string driver;
  std::uint64_t seed = 0;
  Hyper hyper;
  double final_gap = kNaN;
  double cumulative_loss = kNaN;           ///< sum_t f(x_t)
  double cumulative_loss_averaged = kNaN;  ///< sum_t f(xbar_t)
  bool diverged = false;
  int diverged_step = 0;
  std::string trajectory_file;  ///< relative to the output directory; empty if diverged
  double wall_time = 0.0;       ///< seconds; kept out of deterministic outputs

  bool operator==(const RunRecord& o) const {
    auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
    return run_id == o.run_id && config_hash == o.config_hash && label == o.label &&
           driver == o.driver && seed == o.seed && hyper == o.hyper &&
           same(final_gap, o.final_gap) && same(cumulative_loss, o.cumulative_loss) &&
           same(cumulative_loss_averaged, o.cumulative_loss_averaged) &&
           diverged == o.diverged && diverged_step == o.diverged_step &&
           trajectory_file == o.trajectory_file;
  }
};

inline nlohmann::json to_json(const RunRecord& r) {
  return {{"run_id", r.run_id},
          {"config_hash", r.config_hash},
          {"label", r.label},
          {"driver", r.driver},
          {"seed", r.seed},
          {"hyper", to_json(r.hyper)},
          {"final_gap", real_to_json(r.final_gap)},
          {"cumulative_loss", real_to_json(r.cumulative_loss)},
          {"cumulative_loss_averaged", real_to_json(r.cumulative_loss_averaged)},
          {"diverged", r.diverged},
          {"diverged_step", r.diverged_step},
          {"trajectory_file", r.trajectory_file}};
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.driver = j.at("driver").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.hyper = hyper_from_json(j.at("hyper"));
  r.final_gap = real_from_json(j.at("final_gap"));
  r.cumulative_loss = real_from_json(j.at("cumulative_loss"));
  r.cumulative_loss_averaged = real_from_json(j.at("cumulative_loss_averaged"));
  r.diverged = j.at("diverged").get<bool>();
  r.diverged_step = j.at("diverged_step").get<int>();
  r.trajectory_file = j.at("trajectory_file").get<std::string>();
  return r;
}

// ---- algorithm dispatch ---------------------------------------------------------

/// Runs one algorithm at one grid point.
///
/// Step sizes of the momentum-style methods are lr / L; AdaGrad-style methods
/// take the raw learning rate. Meta-learned variants use the decay axis as
/// their meta step size and the init axis as w_1 = scale * 1.
inline Trajectory run_algorithm(const AlgorithmSpec& spec, const Objective& objective,
                                const Vector& x0, int horizon, const Hyper& hyper) {
  const Index n = objective.dim();
  const double smoothness = objective.smoothness().value_or(1.0);
  const double lr = hyper.lr_or(1.0);
  const double init = hyper.init_or(0.0);
  const double decay = hyper.decay_or(0.0);
  const UpdateRule rule = UpdateRule::of_kind(spec.rule, n);

  switch (spec.driver) {
    case DriverKind::HeavyBall: {
      const double step = lr / smoothness;
      // x_{-1} = x_0 + init * step * grad f(x_0): an initial velocity along -grad.
      const Vector velocity = -init * step * objective.gradient(x0);
      return heavy_ball(objective, step, decay / (1.0 + decay), horizon, x0, velocity);
    }
    case DriverKind::GradientDescent:
      return gradient_descent(objective, lr / smoothness, horizon, x0);
    case DriverKind::Nesterov:
      return nesterov(objective, lr / smoothness, horizon, x0);
    case DriverKind::AdaGrad:
      return adagrad(objective, lr, horizon, x0, init);
    case DriverKind::MetaMomentum:
    case DriverKind::MetaAdaGrad: {
      const bool momentum = spec.driver == DriverKind::MetaMomentum;
      const UpdateRule meta_rule = momentum ? UpdateRule::elementwise_lr(n) : UpdateRule::adagrad_style(n);
      PracticalOptions opts;
      opts.optimism = spec.optimism;
      opts.nonneg_w = spec.constraint == "nonnegative";
      opts.step_scale = momentum ? -lr / smoothness : -lr;
      Trajectory traj = run_practical(objective, meta_rule, BetaSchedule::constant(decay), horizon,
                                      x0, Vector::Constant(meta_rule.meta_dim, init), opts);
      traj.driver = std::string(to_string(spec.driver));
      return traj;
    }
    case DriverKind::Practical: {
      PracticalOptions opts;
      opts.optimism = spec.optimism;
      opts.nonneg_w = spec.constraint == "nonnegative";
      opts.step_scale = spec.step_scale;
      return run_practical(objective, rule, BetaSchedule::constant(decay), horizon, x0,
                           Vector::Constant(rule.meta_dim, init), opts);
    }
    case DriverKind::Convex:
    case DriverKind::Optimistic: {
      const ConstraintSet set = spec.constraint_set(rule.meta_dim);
      const Vector w1 = spec.rule == RuleKind::Direct
                            ? set.project(x0)
                            : set.project(Vector::Constant(rule.meta_dim, init));
      const WeightSchedule weights(spec.weights);
      if (spec.driver == DriverKind::Convex) {
        auto meta = MetaLearnerState::create(BetaSchedule::constant(lr / smoothness), set, w1);
        return run_convex(objective, rule, weights, std::move(meta), horizon, x0, w1);
      }
      // lambda_tilde = 1 / lr, so lr = 1 is the accelerated schedule.
      auto meta = MetaLearnerState::create(BetaSchedule::accelerated(1.0 / lr, smoothness), set, w1);
      switch (spec.hint) {
        case HintKind::PrevGradient:
          return run_optimistic(objective, rule, weights, std::move(meta), PrevGradientHint{},
                                horizon, x0, w1);
        case HintKind::PrevMetaGrad:
          return run_optimistic(objective, rule, weights, std::move(meta), PrevMetaGradHint{},
                                horizon, x0, w1);
        default:
          return run_optimistic(objective, rule, weights, std::move(meta), ZeroHint{}, horizon,
                                x0, w1);
      }
    }
  }
  throw ConfigError("unhandled driver");
}

// ---- sweep ----------------------------------------------------------------

struct SweepJob {
  std::size_t algorithm = 0;
  std::uint64_t seed = 0;
  Hyper hyper;
};

namespace detail {

inline std::vector<std::optional<double>> axis(bool used, const std::vector<double>& values) {
  if (!used) return {std::nullopt};
  return {values.begin(), values.end()};
}

}  // namespace detail

/// Full cross-product of algorithms, seeds and the grid axes each algorithm uses.
inline std::vector<SweepJob> enumerate_jobs(const ExperimentConfig& cfg) {
  std::vector<SweepJob> jobs;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    const AxisUse use = cfg.algorithms[a].axes();
    for (std::uint64_t seed : cfg.problem.seeds) {
      for (auto lr : detail::axis(use.learning_rate, cfg.grid.learning_rate)) {
        for (auto init : detail::axis(use.w_init_scale, cfg.grid.w_init_scale)) {
          for (auto decay : detail::axis(use.decay, cfg.grid.decay)) {
            jobs.push_back({a, seed, {lr, init, decay}});
          }
        }
      }
    }
  }
  return jobs;
}

/// Deterministic run identifier: hash of everything that determines the run.
inline std::string run_id(const ExperimentConfig& cfg, const SweepJob& job) {
  nlohmann::json problem = to_json(cfg.problem);
  problem.erase("seeds");
  const nlohmann::json key{{"algorithm", to_json(cfg.algorithms[job.algorithm])},
                           {"problem", problem},
                           {"seed", job.seed},
                           {"horizon", cfg.horizon},
                           {"hyper", to_json(job.hyper)}};
  return hex_id(fnv1a(key.dump()));
}

struct SweepOptions {
  unsigned workers = 1;
  /// Trajectory CSVs go to <output_dir>/trajectories/ when set.
  std::optional<std::filesystem::path> output_dir;
};

struct BestRun {
  std::string label;
  std::uint64_t seed = 0;
  std::string run_id;
  double cumulative_loss = kNaN;
};

struct SweepResult {
  std::string config_hash;
  std::vector<RunRecord> records;  ///< sorted by run_id
  std::vector<BestRun> best;       ///< sorted by (label, seed)

  const RunRecord& record(const std::string& id) const {
    auto it = std::lower_bound(records.begin(), records.end(), id,
                               [](const RunRecord& r, const std::string& k) { return r.run_id < k; });
    if (it == records.end() || it->run_id != id) throw std::out_of_range("no run '" + id + "'");
    return *it;
  }

  const RunRecord& best_for(const std::string& label, std::uint64_t seed) const {
    for (const auto& b : best) {
      if (b.label == label && b.seed == seed) return record(b.run_id);
    }
    throw std::out_of_range("no best run for '" + label + "'");
  }
};

/// True if a is preferred over b: lower cumulative loss, then lower final gap,
/// then lexicographically smaller hyperparameters.
inline bool better_run(const RunRecord& a, const RunRecord& b) {
  auto rank = [](double v) { return std::isnan(v) ? kInf : v; };
  if (rank(a.cumulative_loss) != rank(b.cumulative_loss)) {
    return rank(a.cumulative_loss) < rank(b.cumulative_loss);
  }
  if (rank(a.final_gap) != rank(b.final_gap)) return rank(a.final_gap) < rank(b.final_gap);
  return a.hyper.key() < b.hyper.key();
}

inline std::vector<BestRun> select_best(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::uint64_t>, const RunRecord*> best;
  for (const auto& r : records) {
    auto& slot = best[{r.label, r.seed}];
    if (slot == nullptr || better_run(r, *slot)) slot = &r;
  }
  std::vector<BestRun> out;
  for (const auto& [key, r] : best) out.push_back({key.first, key.second, r->run_id, r->cumulative_loss});
  return out;
}

inline RunRecord execute_job(const ExperimentConfig& cfg, const std::string& hash,
                             const SweepJob& job, const Objective& objective,
                             const std::optional<std::filesystem::path>& output_dir) {
  const AlgorithmSpec& spec = cfg.algorithms[job.algorithm];
  RunRecord rec;
  rec.run_id = run_id(cfg, job);
  rec.config_hash = hash;
  rec.label = spec.label;
  rec.driver = std::string(to_string(spec.driver));
  rec.seed = job.seed;
  rec.hyper = job.hyper;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Trajectory traj =
        run_algorithm(spec, objective, cfg.problem.initial_point(), cfg.horizon, job.hyper);
    rec.final_gap = traj.final_gap();
    rec.cumulative_loss = traj.cumulative_loss();
    rec.cumulative_loss_averaged = traj.cumulative_loss_averaged();
    if (!std::isfinite(rec.cumulative_loss)) {
      rec.diverged = true;
      rec.diverged_step = traj.horizon();
    } else if (output_dir) {
      rec.trajectory_file = "trajectories/" + rec.run_id + ".csv";
      std::ofstream out(*output_dir / rec.trajectory_file);
      if (!out) throw std::runtime_error("cannot write " + rec.trajectory_file);
      write_trajectory_csv(traj, out);
    }
  } catch (const DivergenceError& e) {
    rec.diverged = true;
    rec.diverged_step = e.step();
  } catch (const NonFiniteError&) {
    rec.diverged = true;
  }
  if (rec.diverged) {
    rec.final_gap = kInf;
    rec.cumulative_loss = kInf;
    rec.cumulative_loss_averaged = kInf;
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// Runs every grid point on a pool of worker threads. Diverged runs are
/// recorded with the diverged flag and never abort the sweep.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& options = {}) {
  cfg.validate();
  SweepResult result;
  result.config_hash = config_hash(cfg);
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir / "trajectories");
  }

  std::map<std::uint64_t, std::shared_ptr<const Objective>> problems;
  for (std::uint64_t seed : cfg.problem.seeds) problems[seed] = make_problem(cfg.problem, seed);

  const std::vector<SweepJob> jobs = enumerate_jobs(cfg);
  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        records[i] = execute_job(cfg, result.config_hash, jobs[i], *problems.at(jobs[i].seed),
                                 options.output_dir);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(options.workers,
                                                          static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < count; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.run_id < b.run_id; });
  result.records = std::move(records);
  result.best = select_best(result.records);
  return result;
}

// ---- persistence -------------------------------------------------------------

inline nlohmann::json summary_json(const ExperimentConfig& cfg, const SweepResult& result) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : result.records) records.push_back(to_json(r));
  nlohmann::json best = nlohmann::json::array();
  for (const auto& b : result.best) {
    best.push_back({{"label", b.label},
                    {"seed", b.seed},
                    {"run_id", b.run_id},
                    {"cumulative_loss", real_to_json(b.cumulative_loss)}});
  }
  return {{"config_hash", result.config_hash},
          {"config", to_json(cfg)},
          {"records", records},
          {"best", best}};
}

inline SweepResult sweep_from_summary(const nlohmann::json& j) {
  SweepResult result;
  result.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& r : j.at("records")) result.records.push_back(record_from_json(r));
  std::sort(result.records.begin(), result.records.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.run_id < b.run_id; });
  result.best = select_best(result.records);
  return result;
}

inline nlohmann::json timings_json(const SweepResult& result) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& r : result.records) out[r.run_id] = r.wall_time;
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Writes summary.json (deterministic) and timings.json (wall clock) to `dir`.
inline void write_sweep(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                        const SweepResult& result) {
  std::filesystem::create_directories(dir);
  write_text(dir / "summary.json", summary_json(cfg, result).dump(2) + "\n");
  write_text(dir / "timings.json", timings_json(result).dump(2) + "\n");
}

// ---- figure data ----------------------------------------------------------------

/// Writes two tables to `out_dir`:
///   loss_per_iteration.csv    algorithm,seed,t,loss        best run per algorithm and seed
///   cumulative_loss_vs_lr.csv algorithm,seed,learning_rate,cumulative_loss,run_id
///                             best over the other axes per learning rate ("" when unused)
/// Trajectories are read from `run_dir`; diverged best runs have no curve.
inline void emit_figure_data(const SweepResult& result, const std::filesystem::path& run_dir,
                             const std::filesystem::path& out_dir) {
  if (result.records.empty()) throw std::invalid_argument("figure data needs at least one record");
  std::filesystem::create_directories(out_dir);

  std::ostringstream curves;
  curves << "algorithm,seed,t,loss\n";
  for (const auto& b : result.best) {
    const RunRecord& r = result.record(b.run_id);
    if (r.trajectory_file.empty()) continue;
    std::ifstream in(run_dir / r.trajectory_file);
    if (!in) throw std::runtime_error("missing trajectory " + r.trajectory_file);
    const TrajectoryTable table = read_trajectory_csv(in);
    const std::size_t t_col = table.column("t");
    const std::size_t f_col = table.column("f_x");
    for (const auto& row : table.rows) {
      curves << r.label << ',' << r.seed << ',' << static_cast<long long>(row[t_col]) << ','
             << format_real(row[f_col]) << '\n';
    }
  }
  write_text(out_dir / "loss_per_iteration.csv", curves.str());

  using Key = std::tuple<std::string, std::uint64_t, double>;
  std::map<Key, const RunRecord*> by_lr;
  for (const auto& r : result.records) {
    auto& slot = by_lr[{r.label, r.seed, r.hyper.learning_rate.value_or(-kInf)}];
    if (slot == nullptr || better_run(r, *slot)) slot = &r;
  }
  std::ostringstream sens;
  sens << "algorithm,seed,learning_rate,cumulative_loss,run_id\n";
  for (const auto& [key, r] : by_lr) {
    sens << r->label << ',' << r->seed << ','
         << (r->hyper.learning_rate ? format_real(*r->hyper.learning_rate) : "") << ','
         << format_real(r->cumulative_loss) << ',' << r->run_id << '\n';
  }
  write_text(out_dir / "cumulative_loss_vs_lr.csv", sens.str());
}

}  // namespace metaopt::bench
