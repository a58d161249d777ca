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

// Online learners and the exact optimal threshold policy.

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "alignlearn/core.hpp"
#include "alignlearn/estimators.hpp"

namespace alignlearn {

enum class Formulation { kPerH, kEll };

// Learns one cut per human level from full-feedback history and decides
// a_t = I[b_t > cut(h_t)]. Human levels without data decide 0.
class AlignedLearner {
 public:
  explicit AlignedLearner(UtilityTable utility,
                          Formulation formulation = Formulation::kPerH)
      : utility_(utility), formulation_(formulation) {
    utility_.require_ordering();
  }

  std::string id() const {
    return formulation_ == Formulation::kPerH ? "aligned" : "aligned-ell";
  }
  Formulation formulation() const noexcept { return formulation_; }
  const PerHStats& stats() const noexcept { return stats_; }

  // Cut the learner would use at human level h given the history so far.
  double current_cut(double h) const {
    if (formulation_ == Formulation::kPerH) {
      auto choice = best_threshold(stats_, h, utility_);
      return choice ? choice->cut : kAboveMax;
    }
    const auto ell = maximize_ell();
    auto it = ell.find(h);
    return it == ell.end() ? kAboveMax : it->second;
  }

  int step(double h, double b) const { return decide(current_cut(h), b); }

  void observe(const Observation& obs) { stats_.update(obs); }

  // Current cuts for every level in `human_levels`.
  ThresholdPolicy current_policy(const std::vector<double>& human_levels) const {
    std::vector<double> cuts;
    cuts.reserve(human_levels.size());
    if (formulation_ == Formulation::kEll) {
      const auto ell = maximize_ell();
      for (double h : human_levels) {
        auto it = ell.find(h);
        cuts.push_back(it == ell.end() ? kAboveMax : it->second);
      }
    } else {
      for (double h : human_levels) cuts.push_back(current_cut(h));
    }
    return {human_levels, std::move(cuts)};
  }

 private:
  // Maximizes the global estimate over whole threshold functions. The
  // objective is a sum of per-level terms, so one coordinate sweep over the
  // observed levels (candidates ascending, ties to the larger cut) attains
  // the joint maximum.
  std::map<double, double> maximize_ell() const {
    std::map<double, double> ell;
    std::vector<double> levels;
    for (const auto& [h, s] : stats_.slices()) {
      ell[h] = kBelowMin;
      levels.push_back(h);
    }
    if (levels.empty()) return ell;
    auto as_policy = [&] {
      std::vector<double> cuts;
      cuts.reserve(levels.size());
      for (double h : levels) cuts.push_back(ell[h]);
      return ThresholdPolicy(levels, std::move(cuts));
    };
    for (double h : levels) {
      const auto& s = stats_.slices().at(h);
      std::vector<double> candidates{kBelowMin};
      candidates.insert(candidates.end(), s.values.begin(), s.values.end());
      candidates.push_back(kAboveMax);

      double best_cut = candidates.front();
      ell[h] = best_cut;
      CutCounts best = ell_counts(stats_, as_policy());
      for (std::size_t k = 1; k < candidates.size(); ++k) {
        ell[h] = candidates[k];
        const CutCounts c = ell_counts(stats_, as_policy());
        if (compare_cuts(c, best, utility_) >= 0) {
          best = c;
          best_cut = candidates[k];
        }
      }
      ell[h] = best_cut;
    }
    return ell;
  }

  UtilityTable utility_;
  Formulation formulation_;
  PerHStats stats_;
};

// Keeps per-(h, b) label counts and decides the action with the larger
// un-normalized payoff sum; ties (including cold start) decide 0.
class VanillaLearner {
 public:
  struct Cell {
    std::int64_t zeros = 0;
    std::int64_t ones = 0;
  };

  explicit VanillaLearner(UtilityTable utility) : utility_(utility) {
    utility_.require_ordering();
  }

  std::string id() const { return "vanilla"; }

  // Sum over past steps in cell (h, b) of u(a, y).
  double payoff_sum(int a, double h, double b) const {
    auto it = cells_.find({h, b});
    if (it == cells_.end()) return 0.0;
    return static_cast<double>(it->second.ones) * utility_(a, 1) +
           static_cast<double>(it->second.zeros) * utility_(a, 0);
  }

  int step(double h, double b) const {
    return payoff_sum(0, h, b) >= payoff_sum(1, h, b) ? 0 : 1;
  }

  void observe(const Observation& obs) {
    Cell& c = cells_[{obs.h, obs.b}];
    (obs.y == 0 ? c.zeros : c.ones) += 1;
  }

  const std::map<std::pair<double, double>, Cell>& cells() const noexcept {
    return cells_;
  }

 private:
  UtilityTable utility_;
  std::map<std::pair<double, double>, Cell> cells_;
};

using Learner = std::variant<AlignedLearner, VanillaLearner>;

// Accepted names: aligned, aligned-ell, vanilla.
inline Learner make_learner(const std::string& name, const UtilityTable& u) {
  if (name == "aligned") return AlignedLearner(u, Formulation::kPerH);
  if (name == "aligned-ell") return AlignedLearner(u, Formulation::kEll);
  if (name == "vanilla") return VanillaLearner(u);
  throw ConfigError("unknown learner '" + name + "'");
}

// For each h, the largest b with P(Y=0|h,b) >= rho; below-min if none. When
// that is the largest grid value the cut is reported as kAboveMax.
inline ThresholdPolicy optimal_policy(const Instance& instance) {
  const double rho = decision_rule_threshold(instance.utility());
  const auto& grid = instance.grid();
  std::vector<double> cuts(grid.num_human(), kBelowMin);
  for (std::size_t i = 0; i < grid.num_human(); ++i) {
    for (std::size_t j = grid.num_ai(); j-- > 0;) {
      if (instance.p0(i, j) >= rho) {
        cuts[i] = j + 1 == grid.num_ai() ? kAboveMax : grid.ai_levels()[j];
        break;
      }
    }
  }
  return {grid.human_levels(), std::move(cuts)};
}

// Expected utility of a threshold policy under the instance.
inline double exact_policy_value(const Instance& instance,
                                 const ThresholdPolicy& policy) {
  const auto& grid = instance.grid();
  double value = 0.0;
  for (std::size_t i = 0; i < grid.num_human(); ++i) {
    const double cut = policy.cut(grid.human_levels()[i]);
    for (std::size_t j = 0; j < grid.num_ai(); ++j) {
      const int a = decide(cut, grid.ai_levels()[j]);
      value += instance.joint(i, j) * instance.mu(a, i, j);
    }
  }
  return value;
}

// Expected utility at human level h_i of the cut, conditional on H = h_i.
inline double exact_threshold_value(const Instance& instance, std::size_t i,
                                    double cut) {
  const auto& grid = instance.grid();
  const double mass = instance.human_mass(i);
  if (!(mass > 0.0))
    throw std::domain_error("exact_threshold_value: P(H=h) is zero");
  double value = 0.0;
  for (std::size_t j = 0; j < grid.num_ai(); ++j) {
    const int a = decide(cut, grid.ai_levels()[j]);
    value += instance.joint(i, j) * instance.mu(a, i, j);
  }
  return value / mass;
}

// Expected utility of the unrestricted cell-wise optimum.
inline double unrestricted_optimal_value(const Instance& instance) {
  const auto& grid = instance.grid();
  double value = 0.0;
  for (std::size_t i = 0; i < grid.num_human(); ++i)
    for (std::size_t j = 0; j < grid.num_ai(); ++j)
      value += instance.joint(i, j) *
               std::max(instance.mu(0, i, j), instance.mu(1, i, j));
  return value;
}

// Cuts worth distinguishing on a grid: below-min, every level, above-max.
inline std::vector<double> candidate_cuts(const ConfidenceGrid& grid) {
  std::vector<double> cuts{kBelowMin};
  cuts.insert(cuts.end(), grid.ai_levels().begin(), grid.ai_levels().end());
  cuts.push_back(kAboveMax);
  return cuts;
}

}  // namespace alignlearn
