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

// Experiment configuration for the benchmark harness.
//
// Schema (JSON):
//   {
//     "name":       string,
//     "horizon":    int >= 1                         (default 100)
//     "problem":    {"kind": "quadratic" | "normalised_surrogate" | "logistic",
//                    "dim": int, "seeds": [int], "x0": [real] | null,
//                    "samples": int, "l2": real}     (logistic only)
//     "grid":       {"learning_rate": [real], "w_init_scale": [real], "decay": [real]}
//     "algorithms": [{"label": string, "driver": string, "rule": string,
//                     "hint": string, "weights": string, "optimism": string,
//                     "constraint": string, "radius": real, "step_scale": real}]
//     "verify":     {"seeds": [int], "dims": [int], "mg_beta_multiplier": real}
//   }
// Missing fields take their defaults; missing grid axes take the full sweep values.

#include "metaopt/constraints.hpp"
#include "metaopt/core.hpp"
#include "metaopt/drivers.hpp"
#include "metaopt/optimism_bmg.hpp"
#include "metaopt/problems.hpp"
#include "metaopt/trajectory.hpp"
#include "metaopt/update_rules.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace metaopt::bench {

/// Raised for malformed or inconsistent configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<double> kFullLearningRates{0.1, 0.3, 0.7, 0.9, 3.0, 5.0};
inline const std::vector<double> kFullInitScales{0.0, 0.3, 1.0, 3.0, 10.0, 30.0};
inline const std::vector<double> kFullDecays{0.001, 0.003, 0.01, 0.03, 0.1,
                                               0.3,   1.0,   3.0,  10.0, 30.0};
inline const std::vector<double> kSurrogateMetaRates{0.001, 0.01, 0.02, 0.05, 0.1};

/// Default (trimmed) sweep: a subset of the full grid.
inline const std::vector<double> kTrimmedLearningRates{0.1, 0.7, 3.0};
inline const std::vector<double> kTrimmedInitScales{0.3, 3.0, 30.0};
inline const std::vector<double> kTrimmedDecays{0.001, 0.01, 0.1, 1.0, 10.0};

enum class ProblemKind { Quadratic, NormalisedSurrogate, Logistic };

inline std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Quadratic: return "quadratic";
    case ProblemKind::NormalisedSurrogate: return "normalised_surrogate";
    case ProblemKind::Logistic: return "logistic";
  }
  return "?";
}

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Quadratic;
  int dim = 2;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::optional<std::vector<double>> x0;
  int samples = 200;
  double l2 = 1e-3;

  /// x0 override; otherwise 4 in every coordinate for quadratics and 1 for
  /// the normalised surrogate and logistic objectives.
  Vector initial_point() const {
    if (x0) return Eigen::Map<const Vector>(x0->data(), static_cast<Index>(x0->size()));
    return Vector::Constant(dim, kind == ProblemKind::Quadratic ? 4.0 : 1.0);
  }
};

/// Builds the objective of `spec` for one seed.
inline std::shared_ptr<const Objective> make_problem(const ProblemSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case ProblemKind::Quadratic:
      return std::make_shared<QuadraticProblem>(gen_quadratic(spec.dim, seed));
    case ProblemKind::NormalisedSurrogate: {
      auto base = std::make_shared<QuadraticProblem>(gen_quadratic(spec.dim, seed));
      const double scale = 1.0 / base->lipschitz();
      return std::make_shared<ScaledObjective>(std::move(base), scale);
    }
    case ProblemKind::Logistic:
      return std::make_shared<LogisticRegression>(spec.dim, spec.samples, spec.l2, seed);
  }
  throw ConfigError("unknown problem kind");
}

enum class DriverKind {
  HeavyBall,
  GradientDescent,
  Nesterov,
  AdaGrad,
  MetaMomentum,
  MetaAdaGrad,
  Convex,
  Optimistic,
  Practical,
};

inline std::string_view to_string(DriverKind k) {
  switch (k) {
    case DriverKind::HeavyBall: return "heavy_ball";
    case DriverKind::GradientDescent: return "gradient_descent";
    case DriverKind::Nesterov: return "nesterov";
    case DriverKind::AdaGrad: return "adagrad";
    case DriverKind::MetaMomentum: return "meta_momentum";
    case DriverKind::MetaAdaGrad: return "meta_adagrad";
    case DriverKind::Convex: return "convex";
    case DriverKind::Optimistic: return "optimistic";
    case DriverKind::Practical: return "practical";
  }
  return "?";
}

inline DriverKind driver_kind_from_string(const std::string& s) {
  for (DriverKind k : {DriverKind::HeavyBall, DriverKind::GradientDescent, DriverKind::Nesterov,
                       DriverKind::AdaGrad, DriverKind::MetaMomentum, DriverKind::MetaAdaGrad,
                       DriverKind::Convex, DriverKind::Optimistic, DriverKind::Practical}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown driver '" + s + "'");
}

inline HintKind hint_kind_from_string(const std::string& s) {
  for (HintKind k : {HintKind::Zero, HintKind::PrevGradient, HintKind::PrevMetaGrad}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown or non-configurable hint policy '" + s + "'");
}

inline WeightKind weight_kind_from_string(const std::string& s) {
  if (s == "constant") return WeightKind::ConstantOne;
  if (s == "linear") return WeightKind::Linear;
  throw ConfigError("unknown weight schedule '" + s + "'");
}

inline PracticalOptimism optimism_from_string(const std::string& s) {
  for (PracticalOptimism o : {PracticalOptimism::None, PracticalOptimism::Literal,
                              PracticalOptimism::ErrorCorrected}) {
    if (to_string(o) == s) return o;
  }
  throw ConfigError("unknown optimism variant '" + s + "'");
}

/// Which grid axes a driver consumes; the others collapse to a single placeholder.
struct AxisUse {
  bool learning_rate = true;
  bool w_init_scale = true;
  bool decay = true;
};

struct AlgorithmSpec {
  std::string label;
  DriverKind driver = DriverKind::HeavyBall;
  RuleKind rule = RuleKind::Direct;
  HintKind hint = HintKind::Zero;
  WeightKind weights = WeightKind::ConstantOne;
  PracticalOptimism optimism = PracticalOptimism::None;
  std::string constraint = "unconstrained";  ///< "unconstrained", "nonnegative" or "ball"
  double radius = 10.0;                      ///< ball radius around the origin
  double step_scale = 1.0;                   ///< practical driver only

  AxisUse axes() const {
    switch (driver) {
      case DriverKind::GradientDescent:
      case DriverKind::Nesterov: return {true, false, false};
      case DriverKind::AdaGrad: return {true, true, false};
      case DriverKind::Convex:
      case DriverKind::Optimistic:
        return {true, rule != RuleKind::Direct, false};
      case DriverKind::Practical: return {false, true, true};
      default: return {true, true, true};
    }
  }

  ConstraintSet constraint_set(Index meta_dim) const {
    if (constraint == "unconstrained") return ConstraintSet::unconstrained(meta_dim);
    if (constraint == "nonnegative") return ConstraintSet::nonnegative(meta_dim);
    if (constraint == "ball") return ConstraintSet::ball(Vector::Zero(meta_dim), radius);
    throw ConfigError("unknown constraint '" + constraint + "'");
  }
};

struct GridSpec {
  std::vector<double> learning_rate = kTrimmedLearningRates;
  std::vector<double> w_init_scale = kTrimmedInitScales;
  std::vector<double> decay = kTrimmedDecays;

  static GridSpec full() { return {kFullLearningRates, kFullInitScales, kFullDecays}; }
};

struct VerifySpec {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<int> dims{2, 10};
  /// beta = multiplier / (lambda L) in the O(1/T) bound check; 1 satisfies its precondition.
  double mg_beta_multiplier = 1.0;
};

struct ExperimentConfig {
  std::string name = "quadratic_comparison";
  int horizon = 100;
  ProblemSpec problem;
  GridSpec grid;
  std::vector<AlgorithmSpec> algorithms;
  VerifySpec verify;

  void validate() const {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (problem.dim < 1) throw ConfigError("problem.dim must be >= 1");
    if (problem.seeds.empty()) throw ConfigError("problem.seeds must be non-empty");
    if (std::set<std::uint64_t>(problem.seeds.begin(), problem.seeds.end()).size() !=
        problem.seeds.size()) {
      throw ConfigError("problem.seeds must be distinct");
    }
    if (problem.x0 && static_cast<int>(problem.x0->size()) != problem.dim) {
      throw ConfigError("problem.x0 must have dim entries");
    }
    if (grid.learning_rate.empty() || grid.w_init_scale.empty() || grid.decay.empty()) {
      throw ConfigError("every grid axis must be non-empty");
    }
    if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
    std::set<std::string> labels;
    for (const auto& a : algorithms) {
      if (a.label.empty()) throw ConfigError("algorithm label must be non-empty");
      if (!labels.insert(a.label).second) throw ConfigError("duplicate label '" + a.label + "'");
      a.constraint_set(1);
    }
    if (verify.seeds.empty() || verify.dims.empty()) throw ConfigError("verify grids must be non-empty");
  }
};

/// The four algorithms compared on the 2-dim quadratics.
inline std::vector<AlgorithmSpec> comparison_algorithms() {
  AlgorithmSpec hb{.label = "heavy_ball", .driver = DriverKind::HeavyBall};
  AlgorithmSpec mm{.label = "meta_momentum", .driver = DriverKind::MetaMomentum,
                   .rule = RuleKind::ElementwiseLR, .constraint = "nonnegative"};
  AlgorithmSpec ag{.label = "adagrad", .driver = DriverKind::AdaGrad};
  AlgorithmSpec ma{.label = "meta_adagrad", .driver = DriverKind::MetaAdaGrad,
                   .rule = RuleKind::AdaGradStyle, .constraint = "nonnegative"};
  return {hb, mm, ag, ma};
}

/// Built-in configuration: the 2-dim quadratic comparison on a trimmed grid.
inline ExperimentConfig default_config(bool full_grid = false) {
  ExperimentConfig cfg;
  cfg.algorithms = comparison_algorithms();
  if (full_grid) cfg.grid = GridSpec::full();
  return cfg;
}

// ---- JSON conversion ---------------------------------------------------------

inline nlohmann::json to_json(const AlgorithmSpec& a) {
  return {{"label", a.label},
          {"driver", std::string(to_string(a.driver))},
          {"rule", std::string(to_string(a.rule))},
          {"hint", std::string(to_string(a.hint))},
          {"weights", std::string(to_string(a.weights))},
          {"optimism", std::string(to_string(a.optimism))},
          {"constraint", a.constraint},
          {"radius", a.radius},
          {"step_scale", a.step_scale}};
}

inline nlohmann::json to_json(const ProblemSpec& p) {
  nlohmann::json out{{"kind", std::string(to_string(p.kind))},
                     {"dim", p.dim},
                     {"seeds", p.seeds},
                     {"x0", nullptr}};
  if (p.x0) out["x0"] = *p.x0;
  if (p.kind == ProblemKind::Logistic) {
    out["samples"] = p.samples;
    out["l2"] = p.l2;
  }
  return out;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json algos = nlohmann::json::array();
  for (const auto& a : c.algorithms) algos.push_back(to_json(a));
  return {{"name", c.name},
          {"horizon", c.horizon},
          {"problem", to_json(c.problem)},
          {"grid",
           {{"learning_rate", c.grid.learning_rate},
            {"w_init_scale", c.grid.w_init_scale},
            {"decay", c.grid.decay}}},
          {"algorithms", algos},
          {"verify",
           {{"seeds", c.verify.seeds},
            {"dims", c.verify.dims},
            {"mg_beta_multiplier", c.verify.mg_beta_multiplier}}}};
}

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown field '" + key + "' in " + where);
  }
}

}  // namespace detail

inline AlgorithmSpec algorithm_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("algorithm entries must be objects");
  detail::reject_unknown(j, {"label", "driver", "rule", "hint", "weights", "optimism",
                             "constraint", "radius", "step_scale"},
                         "algorithm");
  AlgorithmSpec a;
  a.driver = driver_kind_from_string(detail::get_or<std::string>(j, "driver", "heavy_ball"));
  a.label = detail::get_or<std::string>(j, "label", std::string(to_string(a.driver)));
  try {
    a.rule = rule_kind_from_string(detail::get_or<std::string>(j, "rule", "direct"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  a.hint = hint_kind_from_string(detail::get_or<std::string>(j, "hint", "zero"));
  a.weights = weight_kind_from_string(detail::get_or<std::string>(j, "weights", "constant"));
  a.optimism = optimism_from_string(detail::get_or<std::string>(j, "optimism", "none"));
  a.constraint = detail::get_or<std::string>(j, "constraint", "unconstrained");
  a.radius = detail::get_or<double>(j, "radius", 10.0);
  a.step_scale = detail::get_or<double>(j, "step_scale", 1.0);
  return a;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  detail::reject_unknown(j, {"name", "horizon", "problem", "grid", "algorithms", "verify"},
                         "config");
  ExperimentConfig c;
  c.name = detail::get_or<std::string>(j, "name", c.name);
  c.horizon = detail::get_or<int>(j, "horizon", c.horizon);
  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    detail::reject_unknown(p, {"kind", "dim", "seeds", "x0", "samples", "l2"}, "problem");
    const std::string kind = detail::get_or<std::string>(p, "kind", "quadratic");
    if (kind == "quadratic") c.problem.kind = ProblemKind::Quadratic;
    else if (kind == "normalised_surrogate") c.problem.kind = ProblemKind::NormalisedSurrogate;
    else if (kind == "logistic") c.problem.kind = ProblemKind::Logistic;
    else throw ConfigError("unknown problem kind '" + kind + "'");
    c.problem.dim = detail::get_or<int>(p, "dim", c.problem.dim);
    c.problem.seeds = detail::get_or<std::vector<std::uint64_t>>(p, "seeds", c.problem.seeds);
    if (p.contains("x0") && !p.at("x0").is_null()) {
      c.problem.x0 = detail::get_or<std::vector<double>>(p, "x0", {});
    }
    c.problem.samples = detail::get_or<int>(p, "samples", c.problem.samples);
    c.problem.l2 = detail::get_or<double>(p, "l2", c.problem.l2);
  }
  // A config file that names a grid gets the full sweep for any axis it omits.
  c.grid = GridSpec::full();
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::reject_unknown(g, {"learning_rate", "w_init_scale", "decay"}, "grid");
    c.grid.learning_rate = detail::get_or(g, "learning_rate", c.grid.learning_rate);
    c.grid.w_init_scale = detail::get_or(g, "w_init_scale", c.grid.w_init_scale);
    c.grid.decay = detail::get_or(g, "decay", c.grid.decay);
  }
  if (j.contains("algorithms")) {
    for (const auto& a : j.at("algorithms")) c.algorithms.push_back(algorithm_from_json(a));
  } else {
    c.algorithms = comparison_algorithms();
  }
  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    detail::reject_unknown(v, {"seeds", "dims", "mg_beta_multiplier"}, "verify");
    c.verify.seeds = detail::get_or(v, "seeds", c.verify.seeds);
    c.verify.dims = detail::get_or(v, "dims", c.verify.dims);
    c.verify.mg_beta_multiplier =
        detail::get_or(v, "mg_beta_multiplier", c.verify.mg_beta_multiplier);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex_id(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Stable identifier of a configuration: hash of its canonical JSON.
inline std::string config_hash(const ExperimentConfig& c) { return hex_id(fnv1a(to_json(c).dump())); }

}  // namespace metaopt::bench
