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

// Regret accounting, alignment metrics, confidence radii, the imperfect
// alignment bound and regret-curve aggregation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignlearn/core.hpp"
#include "alignlearn/replay.hpp"

namespace alignlearn {

// Shortfall of action `a` in cell (h, b) against the cell-wise optimum.
inline double instantaneous_regret(const Instance& instance, double h, double b,
                                   int a) {
  const auto i = instance.grid().human_index(h);
  const auto j = instance.grid().ai_index(b);
  if (!i || !j)
    throw std::out_of_range("instantaneous_regret: (h, b) not on the grid");
  const double mu0 = instance.mu(0, *i, *j);
  const double mu1 = instance.mu(1, *i, *j);
  return std::max(mu0, mu1) - (a == 1 ? mu1 : mu0);
}

struct AlignmentMetrics {
  double mae = 0.0;
  double eae = 0.0;
};

// Maximum and expected alignment error over ordered pairs (h <= h', b <= b')
// of P(Y=1|h,b) - P(Y=1|h',b'). Cells without a value are skipped. The
// identity pair is included and EAE is normalized by |H|*|B|.
inline AlignmentMetrics mae_eae(const ConfidenceGrid& grid,
                                const std::vector<std::optional<double>>& p1) {
  const std::size_t nh = grid.num_human(), nb = grid.num_ai();
  if (nh == 0 || nb == 0) throw std::invalid_argument("mae_eae: empty grid");
  if (p1.size() != nh * nb)
    throw std::invalid_argument("mae_eae: table size does not match grid");
  double mae = 0.0, positive_sum = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < nh; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      const auto& lo = p1[i * nb + j];
      if (!lo) continue;
      for (std::size_t i2 = i; i2 < nh; ++i2)
        for (std::size_t j2 = j; j2 < nb; ++j2) {
          const auto& hi = p1[i2 * nb + j2];
          if (!hi) continue;
          const double gap = *lo - *hi;
          mae = any ? std::max(mae, gap) : gap;
          any = true;
          if (gap > 0.0) positive_sum += gap;
        }
    }
  if (!any) throw std::invalid_argument("mae_eae: no populated cells");
  return {mae, positive_sum / static_cast<double>(nh * nb)};
}

inline AlignmentMetrics mae_eae(const Instance& instance) {
  std::vector<std::optional<double>> p1(instance.cond().begin(),
                                        instance.cond().end());
  return mae_eae(instance.grid(), p1);
}

inline AlignmentMetrics mae_eae(const CellCounts& counts) {
  std::vector<std::optional<double>> p1;
  p1.reserve(counts.count.size());
  for (std::size_t i = 0; i < counts.grid.num_human(); ++i)
    for (std::size_t j = 0; j < counts.grid.num_ai(); ++j)
      p1.push_back(counts.p_hat(i, j));
  return mae_eae(counts.grid, p1);
}

// P(Y=1|h,b) nondecreasing over every ordered pair of contexts.
inline bool is_perfectly_aligned(const Instance& instance) {
  return mae_eae(instance).mae <= 0.0;
}

struct AlignmentCell {
  double h = 0.0;
  double b = 0.0;
  double p1 = 0.0;
  std::optional<std::int64_t> count;
  std::optional<std::int64_t> positives;
  bool low_count = false;
};

struct MonotonicityViolation {
  double h = 0.0;
  double b_low = 0.0;
  double b_high = 0.0;
  double p_low = 0.0;
  double p_high = 0.0;
  double gap = 0.0;
  std::optional<std::int64_t> count_low;
  std::optional<std::int64_t> count_high;
};

struct AlignmentReport {
  AlignmentMetrics metrics;
  std::vector<AlignmentCell> cells;  // populated cells only
  std::vector<MonotonicityViolation> violations;
  std::size_t unseen_cells = 0;
  std::string source;  // "instance" or "empirical"
};

// Cells with fewer observations than this are flagged.
inline constexpr std::int64_t kLowCountThreshold = 5;

namespace detail {

inline std::vector<MonotonicityViolation> per_h_violations(
    const std::vector<AlignmentCell>& cells) {
  std::vector<MonotonicityViolation> out;
  for (std::size_t a = 0; a < cells.size(); ++a)
    for (std::size_t c = a + 1; c < cells.size(); ++c) {
      const auto& lo = cells[a];
      const auto& hi = cells[c];
      if (lo.h != hi.h || !(lo.b < hi.b) || !(lo.p1 > hi.p1)) continue;
      out.push_back({lo.h, lo.b, hi.b, lo.p1, hi.p1, lo.p1 - hi.p1, lo.count,
                     hi.count});
    }
  return out;
}

}  // namespace detail

// Every (h, b < b') with P(Y=1|h,b) > P(Y=1|h,b'), from empirical counts.
inline AlignmentReport monotonicity_report(const CellCounts& counts) {
  AlignmentReport report;
  report.source = "empirical";
  report.metrics = mae_eae(counts);
  const auto& g = counts.grid;
  for (std::size_t i = 0; i < g.num_human(); ++i)
    for (std::size_t j = 0; j < g.num_ai(); ++j) {
      const auto p = counts.p_hat(i, j);
      if (!p) {
        ++report.unseen_cells;
        continue;
      }
      const auto c = counts.cell(i, j);
      report.cells.push_back({g.human_levels()[i], g.ai_levels()[j], *p,
                              counts.count[c], counts.positives[c],
                              counts.count[c] < kLowCountThreshold});
    }
  report.violations = detail::per_h_violations(report.cells);
  return report;
}

inline AlignmentReport monotonicity_report(const Instance& instance) {
  AlignmentReport report;
  report.source = "instance";
  report.metrics = mae_eae(instance);
  const auto& g = instance.grid();
  for (std::size_t i = 0; i < g.num_human(); ++i)
    for (std::size_t j = 0; j < g.num_ai(); ++j)
      report.cells.push_back({g.human_levels()[i], g.ai_levels()[j],
                              instance.cond(i, j), std::nullopt, std::nullopt,
                              false});
  report.violations = detail::per_h_violations(report.cells);
  return report;
}

// One-sided DKW radius sqrt(log(2/alpha) / (2n)).
inline double dkw_radius(std::int64_t n, double alpha) {
  if (n < 1) throw std::domain_error("dkw_radius: n must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("dkw_radius: alpha must lie in (0,1)");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

// Clean-event radius 3 * sqrt(log(6 |H| T^3) / (2 n_t(h))).
inline double clean_event_radius(std::int64_t n_h, std::int64_t num_human,
                                 std::int64_t horizon) {
  if (n_h < 1 || num_human < 1 || horizon < 1)
    throw std::domain_error("clean_event_radius: arguments must be >= 1");
  const double t = static_cast<double>(horizon);
  return 3.0 * std::sqrt(std::log(6.0 * static_cast<double>(num_human) * t * t * t) /
                         (2.0 * static_cast<double>(n_h)));
}

// Gap bound MAE * [u11 - u01 + 1.5 (u00 - u01)] for a utility in [0,1].
inline double suboptimality_bound(double mae, const UtilityTable& u) {
  if (!(mae >= 0.0)) throw std::domain_error("suboptimality_bound: MAE < 0");
  if (u.min_payoff() < 0.0 || u.max_payoff() > 1.0)
    throw std::domain_error("suboptimality_bound: utility must lie in [0,1]");
  u.require_ordering();
  return mae * (u.u11 - u.u01 + 1.5 * (u.u00 - u.u01));
}

struct RegretCurve {
  std::string learner_id;
  std::int64_t horizon = 0;
  std::int64_t n_seeds = 0;
  std::vector<double> mean;
  std::vector<double> ci_halfwidth;
  // False for a single seed, where the spread is undefined and reported as 0.
  bool ci_defined = false;
};

inline constexpr double kCiZ = 1.96;

// Per-step mean of cumulative regret with a normal-approximation 95% CI.
inline RegretCurve aggregate_curves(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("aggregate_curves: no traces");
  const std::size_t len = traces.front().steps.size();
  for (const auto& tr : traces)
    if (tr.steps.size() != len)
      throw std::invalid_argument("aggregate_curves: traces differ in length");

  RegretCurve curve;
  curve.learner_id = traces.front().learner_id;
  curve.horizon = static_cast<std::int64_t>(len);
  curve.n_seeds = static_cast<std::int64_t>(traces.size());
  curve.ci_defined = traces.size() > 1;
  curve.mean.resize(len);
  curve.ci_halfwidth.resize(len, 0.0);
  const double k = static_cast<double>(traces.size());
  for (std::size_t t = 0; t < len; ++t) {
    // Deviations are taken from the first trace so identical traces give
    // exactly zero spread.
    const double origin = traces.front().steps[t].cum_regret;
    double shift = 0.0;
    for (const auto& tr : traces) shift += tr.steps[t].cum_regret - origin;
    shift /= k;
    curve.mean[t] = origin + shift;
    if (!curve.ci_defined) continue;
    double ss = 0.0;
    for (const auto& tr : traces) {
      const double d = tr.steps[t].cum_regret - origin - shift;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (k - 1.0));
    curve.ci_halfwidth[t] = kCiZ * sd / std::sqrt(k);
  }
  return curve;
}

}  // namespace alignlearn
