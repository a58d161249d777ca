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

// Monte Carlo checks of uniform deviation inequalities for empirical
// distribution functions: the one-dimensional DKW bound for <= and >
// thresholds, and the per-key threshold class D, whose members are
// I[x <= x_k] with one cut per key k.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "alignlearn/environments.hpp"

namespace alignlearn {

// Continuous uniform law on [0, 1].
struct UniformLaw {
  double sample(Rng& rng) const {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }
  double cdf(double z) const { return std::clamp(z, 0.0, 1.0); }
  double cdf_left(double z) const { return cdf(z); }
  std::vector<double> atoms() const { return {}; }
};

// Finite law on increasing support points.
class DiscreteLaw {
 public:
  DiscreteLaw(std::vector<double> values, std::vector<double> probs)
      : values_(std::move(values)), probs_(std::move(probs)) {
    if (values_.empty() || values_.size() != probs_.size())
      throw std::invalid_argument("DiscreteLaw: need matching nonempty support");
    if (!std::is_sorted(values_.begin(), values_.end()) ||
        std::adjacent_find(values_.begin(), values_.end()) != values_.end())
      throw std::invalid_argument("DiscreteLaw: support must be increasing");
    double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
    cumulative_.resize(probs_.size());
    double run = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k) {
      if (!(probs_[k] >= 0.0)) throw std::invalid_argument("DiscreteLaw: p < 0");
      probs_[k] /= total;
      run += probs_[k];
      cumulative_[k] = run;
    }
    cumulative_.back() = 1.0;
  }

  // Equal mass on m points (k + 0.5) / m.
  static DiscreteLaw uniform_grid(std::size_t m) {
    std::vector<double> v(m);
    for (std::size_t k = 0; k < m; ++k)
      v[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    return {std::move(v), std::vector<double>(m, 1.0)};
  }

  double sample(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return values_[static_cast<std::size_t>(it - cumulative_.begin())];
  }
  double cdf(double z) const {
    auto it = std::upper_bound(values_.begin(), values_.end(), z);
    return it == values_.begin() ? 0.0 : cumulative_[static_cast<std::size_t>(it - values_.begin()) - 1];
  }
  double cdf_left(double z) const {
    auto it = std::lower_bound(values_.begin(), values_.end(), z);
    return it == values_.begin() ? 0.0 : cumulative_[static_cast<std::size_t>(it - values_.begin()) - 1];
  }
  const std::vector<double>& atoms() const { return values_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> values_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

template <class L>
concept RealLaw = requires(const L& law, Rng& rng, double z) {
  { law.sample(rng) } -> std::convertible_to<double>;
  { law.cdf(z) } -> std::convertible_to<double>;
  { law.cdf_left(z) } -> std::convertible_to<double>;
  law.atoms();
};

struct SupDeviations {
  double leq = 0.0;  // sup_z |F_n(z) - F(z)|,   F(z) = P(Z <= z)
  double gt = 0.0;   // sup_z |F+_n(z) - F+(z)|, F+(z) = P(Z > z)
};

// Both functions are right-continuous step/monotone functions, so the
// suprema are attained at (or as left limits of) sample points and atoms.
template <RealLaw Law>
SupDeviations sup_deviations(std::vector<double> sample, const Law& law) {
  if (sample.empty()) throw std::invalid_argument("sup_deviations: empty sample");
  std::sort(sample.begin(), sample.end());
  std::vector<double> points = sample;
  const auto& atoms = law.atoms();
  points.insert(points.end(), atoms.begin(), atoms.end());
  const double n = static_cast<double>(sample.size());
  SupDeviations d;
  for (double p : points) {
    const auto le = static_cast<double>(
        std::upper_bound(sample.begin(), sample.end(), p) - sample.begin());
    const auto lt = static_cast<double>(
        std::lower_bound(sample.begin(), sample.end(), p) - sample.begin());
    const double f = law.cdf(p), f_left = law.cdf_left(p);
    d.leq = std::max({d.leq, std::abs(le / n - f), std::abs(lt / n - f_left)});
    d.gt = std::max({d.gt, std::abs((n - le) / n - (1.0 - f)),
                     std::abs((n - lt) / n - (1.0 - f_left))});
  }
  return d;
}

// DKW tail bound 2 exp(-2 n eps^2).
inline double dkw_tail_bound(std::int64_t n, double eps) {
  return 2.0 * std::exp(-2.0 * static_cast<double>(n) * eps * eps);
}

struct CoverageResult {
  std::int64_t trials = 0;
  double exceed_leq = 0.0;  // fraction of trials with sup deviation > eps
  double exceed_gt = 0.0;
  double bound = 0.0;       // 2 exp(-2 n eps^2), possibly above 1
  // Three binomial standard deviations at the (capped) bound.
  double slack() const {
    const double p = std::min(bound, 1.0);
    return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
  bool within_bound() const {
    return exceed_leq <= bound + slack() && exceed_gt <= bound + slack();
  }
};

template <RealLaw Law>
CoverageResult dkw_coverage_test(const Law& law, std::int64_t n, double eps,
                                 std::int64_t trials, std::uint64_t seed) {
  if (n < 1 || trials < 1)
    throw std::invalid_argument("dkw_coverage_test: n and trials must be >= 1");
  Rng rng(seed);
  std::int64_t hits_leq = 0, hits_gt = 0;
  std::vector<double> sample(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < trials; ++t) {
    for (auto& z : sample) z = law.sample(rng);
    const auto d = sup_deviations(sample, law);
    hits_leq += d.leq > eps;
    hits_gt += d.gt > eps;
  }
  const double tr = static_cast<double>(trials);
  return {trials, static_cast<double>(hits_leq) / tr,
          static_cast<double>(hits_gt) / tr, dkw_tail_bound(n, eps)};
}

struct KeyedPoint {
  std::size_t key = 0;
  double x = 0.0;
};

// Keys drawn from `key_probs`, X independent of the key with law `x_law`.
struct KeyedLaw {
  std::vector<double> key_probs;
  DiscreteLaw x_law;

  static KeyedLaw uniform(std::size_t num_keys, std::size_t x_levels) {
    return {std::vector<double>(num_keys, 1.0 / static_cast<double>(num_keys)),
            DiscreteLaw::uniform_grid(x_levels)};
  }

  std::vector<KeyedPoint> sample(std::int64_t n, Rng& rng) const {
    std::discrete_distribution<std::size_t> keys(key_probs.begin(), key_probs.end());
    std::vector<KeyedPoint> out(static_cast<std::size_t>(n));
    for (auto& p : out) {
      p.key = keys(rng);
      p.x = x_law.sample(rng);
    }
    return out;
  }
};

struct ClassDDeviations {
  double leq = 0.0;  // over D:  members I[x <= x_k]
  double gt = 0.0;   // over D+: members I[x >  x_k]
};

// sup over cut vectors in X^K of |empirical mean - expectation|. The
// deviation is a sum of per-key terms, so the supremum is the larger of the
// summed per-key maxima and the negated summed per-key minima.
inline ClassDDeviations class_d_sup_deviation(const std::vector<KeyedPoint>& sample,
                                              const KeyedLaw& law) {
  if (sample.empty()) throw std::invalid_argument("class_d: empty sample");
  const std::size_t nk = law.key_probs.size();
  const auto& xs = law.x_law.atoms();
  const double n = static_cast<double>(sample.size());
  // counts[k][m] = #{K = k, X = xs[m]}
  std::vector<std::vector<double>> counts(nk, std::vector<double>(xs.size(), 0.0));
  std::vector<double> key_totals(nk, 0.0);
  for (const auto& p : sample) {
    auto it = std::lower_bound(xs.begin(), xs.end(), p.x);
    if (p.key >= nk || it == xs.end() || *it != p.x)
      throw std::invalid_argument("class_d: sample point outside the law");
    counts[p.key][static_cast<std::size_t>(it - xs.begin())] += 1.0;
    key_totals[p.key] += 1.0;
  }
  double max_sum = 0.0, min_sum = 0.0, max_sum_gt = 0.0, min_sum_gt = 0.0;
  for (std::size_t k = 0; k < nk; ++k) {
    const double pk = law.key_probs[k];
    double run = 0.0;
    double hi = -1e300, lo = 1e300, hi_gt = -1e300, lo_gt = 1e300;
    for (std::size_t m = 0; m < xs.size(); ++m) {
      run += counts[k][m];
      const double f = law.x_law.cdf(xs[m]);
      const double g = run / n - pk * f;
      const double g_gt = (key_totals[k] - run) / n - pk * (1.0 - f);
      hi = std::max(hi, g);
      lo = std::min(lo, g);
      hi_gt = std::max(hi_gt, g_gt);
      lo_gt = std::min(lo_gt, g_gt);
    }
    max_sum += hi;
    min_sum += lo;
    max_sum_gt += hi_gt;
    min_sum_gt += lo_gt;
  }
  return {std::max(std::abs(max_sum), std::abs(min_sum)),
          std::max(std::abs(max_sum_gt), std::abs(min_sum_gt))};
}

// Median (over trials) of the class-D sup deviation at sample size n.
inline double class_d_median_deviation(const KeyedLaw& law, std::int64_t n,
                                       std::int64_t trials, std::uint64_t seed) {
  if (n < 1 || trials < 1)
    throw std::invalid_argument("class_d_median_deviation: n, trials >= 1");
  Rng rng(seed);
  std::vector<double> sups(static_cast<std::size_t>(trials));
  for (auto& s : sups) s = class_d_sup_deviation(law.sample(n, rng), law).leq;
  auto mid = sups.begin() + static_cast<std::ptrdiff_t>(sups.size() / 2);
  std::nth_element(sups.begin(), mid, sups.end());
  if (sups.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(sups.begin(), mid);
  return 0.5 * (lower + upper);
}

struct EnvelopeFit {
  double scale = 0.0;              // C in C * sqrt(keys / n)
  double max_relative_residual = 0.0;
  std::vector<double> relative_residuals;
};

// Fits values ~ C * sqrt(keys / n) by the geometric mean of the ratios and
// reports |value - fit| / fit per point.
inline EnvelopeFit fit_sqrt_envelope(const std::vector<std::size_t>& keys,
                                     std::int64_t n,
                                     const std::vector<double>& values) {
  if (keys.empty() || keys.size() != values.size())
    throw std::invalid_argument("fit_sqrt_envelope: size mismatch");
  double log_sum = 0.0;
  std::vector<double> base(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    base[i] = std::sqrt(static_cast<double>(keys[i]) / static_cast<double>(n));
    log_sum += std::log(values[i] / base[i]);
  }
  EnvelopeFit fit;
  fit.scale = std::exp(log_sum / static_cast<double>(keys.size()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double predicted = fit.scale * base[i];
    const double r = std::abs(values[i] - predicted) / predicted;
    fit.relative_residuals.push_back(r);
    fit.max_relative_residual = std::max(fit.max_relative_residual, r);
  }
  return fit;
}

}  // namespace alignlearn
