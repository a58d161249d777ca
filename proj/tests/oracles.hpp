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

// Reference implementations used only by the tests. Each one recomputes a
// quantity from first principles (direct sums, exhaustive enumeration)
// without going through the library's incremental machinery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "alignlearn/core.hpp"
#include "alignlearn/environments.hpp"

namespace oracle {

using alignlearn::ConfidenceGrid;
using alignlearn::Instance;
using alignlearn::kAboveMax;
using alignlearn::kBelowMin;
using alignlearn::Observation;
using alignlearn::UtilityTable;

inline int act(double cut, double b) { return b > cut ? 1 : 0; }

// Sum over past observations at h of u(I[b' > cut], y').
inline double history_sum(const std::vector<Observation>& hist, double h,
                          double cut, const UtilityTable& u) {
  double s = 0.0;
  for (const auto& o : hist)
    if (o.h == h) s += u(act(cut, o.b), o.y);
  return s;
}

inline std::int64_t count_at(const std::vector<Observation>& hist, double h) {
  return std::count_if(hist.begin(), hist.end(), [h](const auto& o) { return o.h == h; });
}

// Per-observation bracket written out term by term.
inline double eq_bracket_mean(const std::vector<Observation>& hist, double h,
                              double cut, const UtilityTable& u) {
  double s = 0.0;
  std::int64_t n = 0;
  for (const auto& o : hist) {
    if (o.h != h) continue;
    ++n;
    const double z_gt = (o.y == 0 && o.b > cut) ? 1.0 : 0.0;
    const double z_le = (o.y == 0 && o.b <= cut) ? 1.0 : 0.0;
    const double le = o.b <= cut ? 1.0 : 0.0;
    s += z_gt * (u.u10 - u.u11) + z_le * (u.u00 - u.u01) + le * (u.u01 - u.u11) + u.u11;
  }
  return s / static_cast<double>(n);
}

inline std::vector<double> cuts_with_sentinels(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  values.insert(values.begin(), kBelowMin);
  values.push_back(kAboveMax);
  return values;
}

inline std::vector<double> observed_b(const std::vector<Observation>& hist, double h) {
  std::vector<double> v;
  for (const auto& o : hist)
    if (o.h == h) v.push_back(o.b);
  return v;
}

struct Argmax {
  double cut;
  double sum;
};

// Largest maximizing cut among `cuts`, by exact history sums (integer
// utilities keep the sums exact).
inline Argmax argmax_cut(const std::vector<Observation>& hist, double h,
                         const std::vector<double>& cuts, const UtilityTable& u) {
  Argmax best{cuts.front(), history_sum(hist, h, cuts.front(), u)};
  for (double c : cuts) {
    const double s = history_sum(hist, h, c, u);
    if (s > best.sum || (s == best.sum && c > best.cut)) best = {c, s};
  }
  return best;
}

// Calls f on every vector in cands[0] x cands[1] x ...
inline void for_each_product(const std::vector<std::vector<double>>& cands,
                             const std::function<void(const std::vector<double>&)>& f) {
  std::vector<std::size_t> idx(cands.size(), 0);
  std::vector<double> cur(cands.size());
  while (true) {
    for (std::size_t k = 0; k < cands.size(); ++k) cur[k] = cands[k][idx[k]];
    f(cur);
    std::size_t k = 0;
    while (k < cands.size() && ++idx[k] == cands[k].size()) idx[k++] = 0;
    if (k == cands.size()) return;
  }
}

// Exhaustive maximum of the pooled history sum over whole functions
// ell: levels -> cands[k]; ties resolved toward the componentwise largest.
struct EllArgmax {
  std::vector<double> cuts;
  double sum;
};

inline EllArgmax argmax_ell(const std::vector<Observation>& hist,
                            const std::vector<double>& levels,
                            const std::vector<std::vector<double>>& cands,
                            const UtilityTable& u) {
  EllArgmax best{{}, -std::numeric_limits<double>::infinity()};
  std::vector<std::vector<double>> maximizers;
  for_each_product(cands, [&](const std::vector<double>& ell) {
    double s = 0.0;
    for (const auto& o : hist) {
      const auto k = static_cast<std::size_t>(
          std::find(levels.begin(), levels.end(), o.h) - levels.begin());
      s += u(act(ell[k], o.b), o.y);
    }
    if (s > best.sum) {
      best.sum = s;
      maximizers.clear();
    }
    if (s == best.sum) maximizers.push_back(ell);
  });
  best.cuts.assign(levels.size(), kBelowMin);
  for (const auto& m : maximizers)
    for (std::size_t k = 0; k < m.size(); ++k) best.cuts[k] = std::max(best.cuts[k], m[k]);
  return best;
}

// Cell-wise optimum: decide 1 iff mu(1) > mu(0).
inline int cellwise_action(const Instance& inst, std::size_t i, std::size_t j) {
  const auto& u = inst.utility();
  const double p0 = 1.0 - inst.cond(i, j);
  const double m0 = p0 * u.u00 + (1.0 - p0) * u.u01;
  const double m1 = p0 * u.u10 + (1.0 - p0) * u.u11;
  return m1 > m0 ? 1 : 0;
}

// Expected utility of the decision table `a` (row-major over the grid).
inline double table_value(const Instance& inst, const std::vector<int>& a) {
  double v = 0.0;
  const auto& u = inst.utility();
  const std::size_t nb = inst.grid().num_ai();
  for (std::size_t i = 0; i < inst.grid().num_human(); ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      const double p1 = inst.cond(i, j);
      v += inst.joint(i, j) * (p1 * u(a[i * nb + j], 1) + (1.0 - p1) * u(a[i * nb + j], 0));
    }
  return v;
}

inline std::vector<int> decisions_of(const ConfidenceGrid& g, const std::vector<double>& cuts) {
  std::vector<int> a;
  for (std::size_t i = 0; i < g.num_human(); ++i)
    for (double b : g.ai_levels()) a.push_back(act(cuts[i], b));
  return a;
}

// Best threshold policy by enumerating every cut vector over
// {below-min} + B + {above-max}; ties toward the componentwise largest.
struct PolicyArgmax {
  std::vector<double> cuts;
  double value;
};

inline PolicyArgmax best_threshold_policy(const Instance& inst, double tie_tol = 0.0) {
  const auto& g = inst.grid();
  std::vector<double> cands{kBelowMin};
  cands.insert(cands.end(), g.ai_levels().begin(), g.ai_levels().end());
  cands.push_back(kAboveMax);
  std::vector<std::vector<double>> all(g.num_human(), cands);
  PolicyArgmax best{{}, -std::numeric_limits<double>::infinity()};
  std::vector<std::vector<double>> maximizers;
  for_each_product(all, [&](const std::vector<double>& cuts) {
    const double v = table_value(inst, decisions_of(g, cuts));
    if (v > best.value + tie_tol) {
      best.value = v;
      maximizers.clear();
    }
    if (std::abs(v - best.value) <= tie_tol) maximizers.push_back(cuts);
  });
  best.cuts.assign(g.num_human(), kBelowMin);
  for (const auto& m : maximizers)
    for (std::size_t k = 0; k < m.size(); ++k) best.cuts[k] = std::max(best.cuts[k], m[k]);
  return best;
}

// Pairwise MAE/EAE straight from the definition over ordered pairs.
struct Metrics {
  double mae;
  double eae;
};

inline Metrics pairwise_metrics(std::size_t nh, std::size_t nb, const std::vector<double>& p1) {
  double mae = -std::numeric_limits<double>::infinity();
  double pos = 0.0;
  for (std::size_t a = 0; a < nh * nb; ++a)
    for (std::size_t c = 0; c < nh * nb; ++c) {
      const std::size_t i = a / nb, j = a % nb, i2 = c / nb, j2 = c % nb;
      if (i > i2 || j > j2) continue;
      const double gap = p1[a] - p1[c];
      mae = std::max(mae, gap);
      pos += std::max(gap, 0.0);
    }
  return {mae, pos / static_cast<double>(nh * nb)};
}

// Random perfectly aligned table: cumulative sums of nonnegative dyadic
// increments along h and b, scaled into [0,1]. All entries are multiples of
// 1/16 so utility comparisons against them are exact.
inline std::vector<double> aligned_table(std::size_t nh, std::size_t nb, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> step(0, 2);
  std::vector<int> lvl(nh * nb, 0);
  for (std::size_t i = 0; i < nh; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      int base = 0;
      if (i > 0) base = std::max(base, lvl[(i - 1) * nb + j]);
      if (j > 0) base = std::max(base, lvl[i * nb + j - 1]);
      lvl[i * nb + j] = std::min(16, base + step(rng));
    }
  std::vector<double> p(nh * nb);
  for (std::size_t c = 0; c < p.size(); ++c) p[c] = lvl[c] / 16.0;
  return p;
}

inline std::vector<double> random_joint(std::size_t cells, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> w(1, 4);
  std::vector<double> j(cells);
  double total = 0.0;
  for (auto& x : j) total += (x = w(rng));
  for (auto& x : j) x /= total;
  return j;
}

inline std::vector<double> grid_levels(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
  return v;
}

// Integer-valued utilities satisfying the payoff ordering.
inline UtilityTable random_int_utility(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 4);
  while (true) {
    UtilityTable u{double(d(rng)), double(d(rng)), double(d(rng)), double(d(rng))};
    if (u.satisfies_ordering()) return u;
  }
}

}  // namespace oracle
