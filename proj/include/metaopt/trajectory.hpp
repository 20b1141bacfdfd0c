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

#include "metaopt/core.hpp"
#include "metaopt/update_rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace metaopt {

enum class WeightKind { ConstantOne, Linear };

/// Averaging weights alpha_t with prefix sums and rho_t = alpha_t / alpha_{1:t}.
class WeightSchedule {
 public:
  constexpr explicit WeightSchedule(WeightKind kind = WeightKind::ConstantOne) : kind_(kind) {}

  static constexpr WeightSchedule constant_one() { return WeightSchedule(WeightKind::ConstantOne); }
  static constexpr WeightSchedule linear() { return WeightSchedule(WeightKind::Linear); }

  constexpr WeightKind kind() const noexcept { return kind_; }

  double alpha(int t) const {
    check(t);
    return kind_ == WeightKind::Linear ? static_cast<double>(t) : 1.0;
  }

  /// alpha_{1:t}; zero for t = 0.
  double prefix(int t) const {
    if (t < 0) throw std::out_of_range("weight prefix needs t >= 0");
    const double td = t;
    return kind_ == WeightKind::Linear ? td * (td + 1.0) / 2.0 : td;
  }

  double rho(int t) const {
    check(t);
    return kind_ == WeightKind::Linear ? 2.0 / (static_cast<double>(t) + 1.0)
                                       : 1.0 / static_cast<double>(t);
  }

 private:
  static void check(int t) {
    if (t < 1) throw std::out_of_range("weights are indexed from t = 1");
  }

  WeightKind kind_;
};

inline std::string_view to_string(WeightKind kind) {
  return kind == WeightKind::Linear ? "linear" : "constant";
}

/// One iteration of any driver.
///
/// `jac_point` is where phi was evaluated (xbar_{t-1} for averaged drivers,
/// x_{t-1} for additive ones); `eval_point` quantities (f_xbar, grad) refer to
/// xbar_t, which equals x_t for drivers without averaging.
struct StepRecord {
  int t = 0;
  Vector x;
  Vector xbar;
  Vector w;          ///< w_t, the meta-parameters that produced x_t
  Vector jac_point;
  Vector grad;       ///< grad f(xbar_t)
  Vector meta_grad;  ///< g_t
  Vector hint;       ///< g~_t (zero when the driver has no hints)
  std::optional<Vector> target;
  double f_x = 0.0;
  double f_xbar = 0.0;
  double gap = kNaN;  ///< f(xbar_t) - f*
  double alpha = 1.0;
  double alpha_prefix = 1.0;
  double beta = 0.0;  ///< beta_t, used to produce w_{t+1}
  double regret_x = 0.0;
  double regret_w = 0.0;
  double target_dist = 0.0;  ///< Bregman mismatch B_{z_t}(x_t), zero without targets
};

/// Full record of one run. Immutable once a driver returns it.
struct Trajectory {
  std::string driver;
  RuleKind rule = RuleKind::Direct;
  WeightKind weights = WeightKind::ConstantOne;
  Vector xbar0;
  Vector w1;
  Vector meta_anchor;
  Vector meta_comparator;
  std::optional<Vector> x_star;
  double f_star = kNaN;
  double smoothness = kNaN;
  std::vector<StepRecord> steps;

  int horizon() const noexcept { return static_cast<int>(steps.size()); }
  const StepRecord& at(int t) const { return steps.at(static_cast<std::size_t>(t - 1)); }
  const StepRecord& back() const { return steps.back(); }

  double final_gap() const { return steps.empty() ? kNaN : steps.back().gap; }

  /// sum_t f(x_t) on raw iterates.
  double cumulative_loss() const {
    double s = 0.0;
    for (const auto& r : steps) s += r.f_x;
    return s;
  }

  /// sum_t f(xbar_t).
  double cumulative_loss_averaged() const {
    double s = 0.0;
    for (const auto& r : steps) s += r.f_xbar;
    return s;
  }

  /// xbar_{t-1}, with xbar_0 the initialisation.
  const Vector& xbar_before(int t) const { return t <= 1 ? xbar0 : at(t - 1).xbar; }

  /// Sub-trajectory with the first t records.
  Trajectory truncated(int t) const {
    Trajectory out = *this;
    out.steps.resize(static_cast<std::size_t>(std::max(0, std::min(t, horizon()))));
    return out;
  }
};

// ---- CSV export ------------------------------------------------------------

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kTrajectoryCsvHeader =
    "t,f_x,f_xbar,gap,grad_norm,regret_x,regret_w,hint_norm,target_dist";

/// One row per step. Columns:
///   t            iteration index, 1-based
///   f_x          f(x_t) on the raw iterate
///   f_xbar       f(xbar_t)
///   gap          f(xbar_t) - f*
///   grad_norm    ||grad f(xbar_t)||
///   regret_x     running sum alpha_s <grad f(xbar_s), x_s - x*>
///   regret_w     running sum alpha_s <g_s, w_s - w*>
///   hint_norm    ||g~_t||
///   target_dist  B_{z_t}(x_t), 0 without targets
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << kTrajectoryCsvHeader << '\n';
  for (const auto& r : traj.steps) {
    out << r.t << ',' << format_real(r.f_x) << ',' << format_real(r.f_xbar) << ','
        << format_real(r.gap) << ',' << format_real(r.grad.norm()) << ','
        << format_real(r.regret_x) << ',' << format_real(r.regret_w) << ','
        << format_real(r.hint.size() ? r.hint.norm() : 0.0) << ',' << format_real(r.target_dist)
        << '\n';
  }
}

/// Parsed trajectory CSV: the header and numeric rows.
struct TrajectoryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw std::out_of_range("no column '" + name + "'");
  }
};

inline double parse_real(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

inline TrajectoryTable read_trajectory_csv(std::istream& in) {
  TrajectoryTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory CSV");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(parse_real(cell));
    if (row.size() != table.columns.size()) throw std::runtime_error("ragged trajectory CSV");
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace metaopt
