// Copyright 2026 The alignlearn Authors.
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

// Domain types shared across the library: confidence grids, utility tables,
// threshold policies, fully specified instances and run traces.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alignlearn {

// Raised for malformed experiment configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for malformed or invalid input data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a structural precondition such as the utility ordering fails.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Thresholds live on the extended real line. A decision is 1 iff b > cut, so
// kBelowMin decides 1 everywhere and kAboveMax decides 0 everywhere.
inline constexpr double kBelowMin = -std::numeric_limits<double>::infinity();
inline constexpr double kAboveMax = std::numeric_limits<double>::infinity();

inline int decide(double cut, double b) noexcept { return b > cut ? 1 : 0; }

namespace detail {

inline bool strictly_increasing_unit(const std::vector<double>& v) {
  if (v.empty()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0 || v[i] > 1.0) return false;
    if (i > 0 && !(v[i - 1] < v[i])) return false;
  }
  return true;
}

inline std::optional<std::size_t> exact_index(const std::vector<double>& v,
                                              double x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) return std::nullopt;
  return static_cast<std::size_t>(it - v.begin());
}

}  // namespace detail

// The finite ordered sets of human (H) and AI (B) confidence values.
// Values are matched exactly as stored.
class ConfidenceGrid {
 public:
  ConfidenceGrid(std::vector<double> human_levels,
                 std::vector<double> ai_levels)
      : human_(std::move(human_levels)), ai_(std::move(ai_levels)) {
    if (!detail::strictly_increasing_unit(human_))
      throw ConfigError(
          "human levels must be nonempty, strictly increasing, in [0,1]");
    if (!detail::strictly_increasing_unit(ai_))
      throw ConfigError(
          "AI levels must be nonempty, strictly increasing, in [0,1]");
  }

  // Evenly spaced midpoints (i + 0.5) / n.
  static ConfidenceGrid midpoints(std::size_t n_human, std::size_t n_ai) {
    if (n_human == 0 || n_ai == 0)
      throw ConfigError("grid sizes must be at least 1");
    auto mids = [](std::size_t n) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i)
        v[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      return v;
    };
    return ConfidenceGrid(mids(n_human), mids(n_ai));
  }

  const std::vector<double>& human_levels() const noexcept { return human_; }
  const std::vector<double>& ai_levels() const noexcept { return ai_; }
  std::size_t num_human() const noexcept { return human_.size(); }
  std::size_t num_ai() const noexcept { return ai_.size(); }
  std::size_t num_cells() const noexcept { return human_.size() * ai_.size(); }

  std::optional<std::size_t> human_index(double h) const {
    return detail::exact_index(human_, h);
  }
  std::optional<std::size_t> ai_index(double b) const {
    return detail::exact_index(ai_, b);
  }

  friend bool operator==(const ConfidenceGrid&,
                         const ConfidenceGrid&) = default;

 private:
  std::vector<double> human_;
  std::vector<double> ai_;
};

// Payoffs u(a, y) for decision a and label y.
struct UtilityTable {
  double u11 = 1.0;
  double u10 = 0.0;
  double u00 = 1.0;
  double u01 = 0.0;

  double operator()(int a, int y) const noexcept {
    if (a == 1) return y == 1 ? u11 : u10;
    return y == 1 ? u01 : u00;
  }

  // Matching decision and label is strictly better than mismatching.
  bool satisfies_ordering() const noexcept {
    return u11 > u10 && u11 > u01 && u00 > u10 && u00 > u01;
  }

  void require_ordering() const {
    if (!satisfies_ordering())
      throw InvariantError(
          "utility must satisfy u11>u10, u11>u01, u00>u10, u00>u01");
  }

  double min_payoff() const noexcept { return std::min({u11, u10, u00, u01}); }
  double max_payoff() const noexcept { return std::max({u11, u10, u00, u01}); }

  // Affine image of the table with min payoff 0 and max payoff 1.
  UtilityTable normalized() const {
    require_ordering();
    const double lo = min_payoff();
    const double span = max_payoff() - lo;
    return {(u11 - lo) / span, (u10 - lo) / span, (u00 - lo) / span,
            (u01 - lo) / span};
  }

  // Scale factor mapping normalized utility differences back to this table.
  double span() const noexcept { return max_payoff() - min_payoff(); }

  // The u(a,y) = I[a=y] - I[a!=y] table.
  static UtilityTable symmetric() { return {1.0, -1.0, 1.0, -1.0}; }

  // Parses "u11,u10,u00,u01".
  static UtilityTable parse(std::string_view text) {
    std::vector<double> vals;
    std::string token;
    std::istringstream in{std::string(text)};
    while (std::getline(in, token, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(token, &used));
        if (token.find_first_not_of(" \t", used) != std::string::npos)
          throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ConfigError("utility: cannot parse '" + token + "'");
      }
    }
    if (vals.size() != 4)
      throw ConfigError("utility: expected four values u11,u10,u00,u01");
    UtilityTable u{vals[0], vals[1], vals[2], vals[3]};
    if (!u.satisfies_ordering())
      throw ConfigError("utility: ordering u11>u10, u11>u01, u00>u10, u00>u01 "
                        "violated");
    return u;
  }

  friend bool operator==(const UtilityTable&, const UtilityTable&) = default;
};

// One interaction: human confidence, AI confidence and the realized label.
struct Observation {
  double h = 0.0;
  double b = 0.0;
  int y = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// mu(a | h, b) given p0 = P(Y=0 | h, b).
inline double conditional_utility(int a, double p0, const UtilityTable& u) {
  if (!(p0 >= 0.0 && p0 <= 1.0))
    throw std::domain_error("conditional_utility: p0 outside [0,1]");
  return p0 * (u(a, 0) - u(a, 1)) + u(a, 1);
}

// Deciding 0 is optimal iff P(Y=0 | h, b) >= the returned value.
inline double decision_rule_threshold(const UtilityTable& u) {
  u.require_ordering();
  return (u.u11 - u.u01) / (u.u11 - u.u10 + u.u00 - u.u01);
}

// Cell-wise optimal action; ties resolve toward 0.
inline int optimal_action(double p0, const UtilityTable& u) {
  return p0 >= decision_rule_threshold(u) ? 0 : 1;
}

// A map from each human level to a cut in B extended by the two sentinels.
class ThresholdPolicy {
 public:
  ThresholdPolicy(std::vector<double> human_levels, std::vector<double> cuts)
      : human_(std::move(human_levels)), cuts_(std::move(cuts)) {
    if (human_.size() != cuts_.size())
      throw std::invalid_argument("ThresholdPolicy: one cut per human level");
  }

  // Decides 0 everywhere.
  static ThresholdPolicy always_zero(const ConfidenceGrid& grid) {
    return {grid.human_levels(),
            std::vector<double>(grid.num_human(), kAboveMax)};
  }

  const std::vector<double>& human_levels() const noexcept { return human_; }
  const std::vector<double>& cuts() const noexcept { return cuts_; }
  double cut_at(std::size_t h_index) const { return cuts_.at(h_index); }

  double cut(double h) const {
    auto idx = detail::exact_index(human_, h);
    if (!idx) throw std::out_of_range("ThresholdPolicy: unknown human level");
    return cuts_[*idx];
  }

  int decide(double h, double b) const { return alignlearn::decide(cut(h), b); }

  friend bool operator==(const ThresholdPolicy&,
                         const ThresholdPolicy&) = default;

 private:
  std::vector<double> human_;
  std::vector<double> cuts_;
};

// A fully specified environment: joint P(H, B), P(Y=1 | H, B) and utility.
class Instance {
 public:
  static constexpr double kMassTolerance = 1e-12;

  Instance(ConfidenceGrid grid, std::vector<double> joint,
           std::vector<double> cond, UtilityTable utility)
      : grid_(std::move(grid)),
        joint_(std::move(joint)),
        cond_(std::move(cond)),
        utility_(utility) {
    const std::size_t cells = grid_.num_cells();
    if (joint_.size() != cells || cond_.size() != cells)
      throw ConfigError("instance tables must have |H|*|B| entries");
    double total = 0.0;
    for (double p : joint_) {
      if (!(p >= 0.0)) throw ConfigError("joint entries must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
      throw ConfigError("joint entries must sum to 1");
    for (double p : cond_)
      if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("conditional entries must lie in [0,1]");
    utility_.require_ordering();
  }

  const ConfidenceGrid& grid() const noexcept { return grid_; }
  const UtilityTable& utility() const noexcept { return utility_; }
  const std::vector<double>& joint() const noexcept { return joint_; }
  const std::vector<double>& cond() const noexcept { return cond_; }

  std::size_t cell(std::size_t i, std::size_t j) const noexcept {
    return i * grid_.num_ai() + j;
  }
  double joint(std::size_t i, std::size_t j) const { return joint_[cell(i, j)]; }
  // P(Y=1 | H=h_i, B=b_j).
  double cond(std::size_t i, std::size_t j) const { return cond_[cell(i, j)]; }
  double p0(std::size_t i, std::size_t j) const { return 1.0 - cond(i, j); }

  double mu(int a, std::size_t i, std::size_t j) const {
    return conditional_utility(a, p0(i, j), utility_);
  }

  // Marginal P(H = h_i).
  double human_mass(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < grid_.num_ai(); ++j) s += joint(i, j);
    return s;
  }

  // The same environment under a different utility table.
  Instance with_utility(const UtilityTable& u) const {
    return Instance(grid_, joint_, cond_, u);
  }

 private:
  ConfidenceGrid grid_;
  std::vector<double> joint_;
  std::vector<double> cond_;
  UtilityTable utility_;
};

struct TraceStep {
  std::int64_t t = 0;
  double h = 0.0;
  double b = 0.0;
  int y = 0;
  int action = 0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

// Per-step record of one learner on one seed.
struct RunTrace {
  std::string learner_id;
  std::uint64_t seed = 0;
  std::vector<TraceStep> steps;

  void append(const Observation& obs, int action, double inst_regret) {
    const double prev = steps.empty() ? 0.0 : steps.back().cum_regret;
    steps.push_back({static_cast<std::int64_t>(steps.size()) + 1, obs.h, obs.b,
                     obs.y, action, inst_regret, prev + inst_regret});
  }

  double final_regret() const {
    return steps.empty() ? 0.0 : steps.back().cum_regret;
  }
};

}  // namespace alignlearn
