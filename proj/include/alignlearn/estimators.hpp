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

// Empirical utility estimators for threshold policies.
//
// For every human level the statistics keep the distinct AI confidences seen
// so far together with aligned prefix counters. The estimated utility of a
// cut is piecewise constant between consecutive distinct values, so a scan
// over those values plus the two sentinels is an exact argmax.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "alignlearn/core.hpp"

namespace alignlearn {

// Counts of past observations on each side of a cut, for one human level or
// summed over all of them.
struct CutCounts {
  std::int64_t n = 0;         // observations
  std::int64_t le = 0;        // b' <= cut
  std::int64_t zeros_le = 0;  // y = 0 and b' <= cut
  std::int64_t zeros_gt = 0;  // y = 0 and b' > cut

  std::int64_t ones_le() const noexcept { return le - zeros_le; }

  CutCounts& operator+=(const CutCounts& o) noexcept {
    n += o.n;
    le += o.le;
    zeros_le += o.zeros_le;
    zeros_gt += o.zeros_gt;
    return *this;
  }

  // Mean utility of deciding 0 for b' <= cut and 1 above it.
  double mean_utility(const UtilityTable& u) const {
    const double sum = static_cast<double>(zeros_gt) * (u.u10 - u.u11) +
                       static_cast<double>(zeros_le) * (u.u00 - u.u01) +
                       static_cast<double>(le) * (u.u01 - u.u11);
    return sum / static_cast<double>(n) + u.u11;
  }
};

// Exact comparison of two cuts over the same observations. Moving a cut only
// changes the counts (zeros_le, ones_le); the utility difference is
// (u00 - u10) * dz - (u11 - u01) * dw, evaluated from integer deltas.
// Returns >0 if `a` is better, <0 if `b` is better, 0 on a tie.
inline int compare_cuts(const CutCounts& a, const CutCounts& b,
                        const UtilityTable& u) {
  const double gain = (u.u00 - u.u10) * static_cast<double>(a.zeros_le - b.zeros_le);
  const double loss = (u.u11 - u.u01) * static_cast<double>(a.ones_le() - b.ones_le());
  if (gain > loss) return 1;
  if (gain < loss) return -1;
  return 0;
}

class PerHStats {
 public:
  struct Slice {
    std::int64_t n = 0;
    std::int64_t zeros = 0;
    std::vector<double> values;  // distinct observed b, increasing
    std::vector<std::int64_t> count_le;
    std::vector<std::int64_t> zeros_le;
    std::vector<std::int64_t> zeros_gt;

    // Counts for an arbitrary cut (sentinels included).
    CutCounts at(double cut) const {
      auto it = std::upper_bound(values.begin(), values.end(), cut);
      if (it == values.begin()) return {n, 0, 0, zeros};
      return at_index(static_cast<std::size_t>(it - values.begin()) - 1);
    }

    CutCounts at_index(std::size_t k) const {
      return {n, count_le[k], zeros_le[k], zeros_gt[k]};
    }
  };

  void update(const Observation& obs) {
    Slice& s = slices_[obs.h];
    const bool zero = obs.y == 0;
    auto it = std::lower_bound(s.values.begin(), s.values.end(), obs.b);
    const auto k = static_cast<std::size_t>(it - s.values.begin());
    if (it == s.values.end() || *it != obs.b) {
      const std::int64_t le = k == 0 ? 0 : s.count_le[k - 1];
      const std::int64_t zle = k == 0 ? 0 : s.zeros_le[k - 1];
      s.values.insert(it, obs.b);
      s.count_le.insert(s.count_le.begin() + static_cast<std::ptrdiff_t>(k), le);
      s.zeros_le.insert(s.zeros_le.begin() + static_cast<std::ptrdiff_t>(k), zle);
      s.zeros_gt.insert(s.zeros_gt.begin() + static_cast<std::ptrdiff_t>(k),
                        s.zeros - zle);
    }
    for (std::size_t m = k; m < s.values.size(); ++m) {
      ++s.count_le[m];
      if (zero) ++s.zeros_le[m];
    }
    if (zero) {
      for (std::size_t m = 0; m < k; ++m) ++s.zeros_gt[m];
      ++s.zeros;
    }
    ++s.n;
    ++total_;
  }

  const Slice* slice(double h) const {
    auto it = slices_.find(h);
    return it == slices_.end() ? nullptr : &it->second;
  }

  std::int64_t n(double h) const {
    const Slice* s = slice(h);
    return s ? s->n : 0;
  }
  std::int64_t total() const noexcept { return total_; }
  const std::map<double, Slice>& slices() const noexcept { return slices_; }

 private:
  std::map<double, Slice> slices_;
  std::int64_t total_ = 0;
};

// Estimated mean utility at human level h of the threshold policy with cut
// `candidate`; nullopt when h has no data.
inline std::optional<double> estimate_mu_bh(const PerHStats& stats, double h,
                                            double candidate,
                                            const UtilityTable& u) {
  const auto* s = stats.slice(h);
  if (s == nullptr || s->n == 0) return std::nullopt;
  return s->at(candidate).mean_utility(u);
}

struct ThresholdChoice {
  double cut = kAboveMax;
  double value = 0.0;
};

// Argmax of estimate_mu_bh over {below-min, distinct observed b, above-max};
// ties go to the largest cut.
inline std::optional<ThresholdChoice> best_threshold(const PerHStats& stats,
                                                     double h,
                                                     const UtilityTable& u) {
  const auto* s = stats.slice(h);
  if (s == nullptr || s->n == 0) return std::nullopt;
  double best_cut = kBelowMin;
  CutCounts best = s->at(kBelowMin);
  for (std::size_t k = 0; k < s->values.size(); ++k) {
    const CutCounts c = s->at_index(k);
    if (compare_cuts(c, best, u) >= 0) {
      best = c;
      best_cut = s->values[k];
    }
  }
  // Above-max sees the same counts as the largest observed value.
  if (compare_cuts(s->at(kAboveMax), best, u) >= 0) {
    best = s->at(kAboveMax);
    best_cut = kAboveMax;
  }
  return ThresholdChoice{best_cut, best.mean_utility(u)};
}

// Global counts for a whole threshold function; every observed human level
// must be covered by `policy`.
inline CutCounts ell_counts(const PerHStats& stats, const ThresholdPolicy& policy) {
  CutCounts total;
  for (const auto& [h, s] : stats.slices()) {
    const CutCounts c = s.at(policy.cut(h));
    total += c;
  }
  return total;
}

// Estimated mean utility of the threshold function over all past
// observations, from empirical joint frequencies.
inline std::optional<double> estimate_mu_ell(const PerHStats& stats,
                                             const ThresholdPolicy& policy,
                                             const UtilityTable& u) {
  if (stats.total() == 0) return std::nullopt;
  return ell_counts(stats, policy).mean_utility(u);
}

}  // namespace alignlearn
