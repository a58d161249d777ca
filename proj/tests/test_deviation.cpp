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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "alignlearn/deviation.hpp"
#include "oracles.hpp"

namespace al = alignlearn;

namespace {

// Direct evaluation of both statistics at every sample point and atom and
// just to the left of each.
template <class Law>
al::SupDeviations brute_sup(const std::vector<double>& sample, const Law& law) {
  std::vector<double> pts = sample;
  for (double a : law.atoms()) pts.push_back(a);
  al::SupDeviations d;
  const double n = static_cast<double>(sample.size());
  for (double p : pts)
    for (double z : {p, std::nextafter(p, -1.0)}) {
      double le = 0.0;
      for (double s : sample) le += s <= z;
      d.leq = std::max(d.leq, std::abs(le / n - law.cdf(z)));
      d.gt = std::max(d.gt, std::abs((n - le) / n - (1.0 - law.cdf(z))));
    }
  return d;
}

TEST(SupDeviations, MatchesBruteForceUniform) {
  al::Rng rng(3);
  al::UniformLaw law;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> s(1 + rep % 30);
    for (auto& x : s) x = law.sample(rng);
    const auto got = al::sup_deviations(s, law);
    const auto ref = brute_sup(s, law);
    EXPECT_NEAR(got.leq, ref.leq, 1e-12);
    EXPECT_NEAR(got.gt, ref.gt, 1e-12);
  }
}

TEST(SupDeviations, MatchesBruteForceDiscrete) {
  al::Rng rng(4);
  al::DiscreteLaw law({0.1, 0.3, 0.7}, {0.2, 0.5, 0.3});
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> s(1 + rep % 20);
    for (auto& x : s) x = law.sample(rng);
    const auto got = al::sup_deviations(s, law);
    const auto ref = brute_sup(s, law);
    EXPECT_NEAR(got.leq, ref.leq, 1e-12);
    EXPECT_NEAR(got.gt, ref.gt, 1e-12);
  }
}

TEST(SupDeviations, KnownSmallCase) {
  // One point at 0.5 under U(0,1): the gap is 0.5 on both sides of it.
  const auto d = al::sup_deviations({0.5}, al::UniformLaw{});
  EXPECT_DOUBLE_EQ(d.leq, 0.5);
  EXPECT_DOUBLE_EQ(d.gt, 0.5);
}

TEST(DiscreteLaw, Validation) {
  EXPECT_THROW(al::DiscreteLaw({0.2, 0.1}, {1, 1}), std::invalid_argument);
  EXPECT_THROW(al::DiscreteLaw({0.1}, {1, 1}), std::invalid_argument);
  al::DiscreteLaw law({0.1, 0.3}, {1, 3});
  EXPECT_DOUBLE_EQ(law.cdf(0.1), 0.25);
  EXPECT_DOUBLE_EQ(law.cdf_left(0.1), 0.0);
  EXPECT_DOUBLE_EQ(law.cdf(0.2), 0.25);
  EXPECT_DOUBLE_EQ(law.cdf(0.3), 1.0);
}

TEST(Coverage, LargeEpsilonNeverExceeds) {
  const auto r = al::dkw_coverage_test(al::UniformLaw{}, 20, 1.0, 2000, 1);
  EXPECT_EQ(r.exceed_leq, 0.0);
  EXPECT_EQ(r.exceed_gt, 0.0);
}

TEST(Coverage, UniformN200Eps01) {
  const auto r = al::dkw_coverage_test(al::UniformLaw{}, 200, 0.1, 10000, 2);
  EXPECT_NEAR(r.bound, 2.0 * std::exp(-4.0), 1e-15);
  EXPECT_LE(r.exceed_leq, r.bound + r.slack());
  EXPECT_LE(r.exceed_gt, r.bound + r.slack());
  EXPECT_TRUE(r.within_bound());
}

TEST(ClassD, MatchesBruteForceOverCutVectors) {
  al::Rng rng(5);
  for (std::size_t keys : {1u, 2u, 3u}) {
    auto law = al::KeyedLaw::uniform(keys, 4);
    law.key_probs = std::vector<double>(keys, 1.0 / static_cast<double>(keys));
    const auto& xs = law.x_law.atoms();
    for (int rep = 0; rep < 30; ++rep) {
      const auto sample = law.sample(12 + rep, rng);
      const double n = static_cast<double>(sample.size());
      std::vector<std::vector<double>> cands(keys, xs);
      double sup_le = 0.0, sup_gt = 0.0;
      oracle::for_each_product(cands, [&](const std::vector<double>& cut) {
        double emp_le = 0.0, emp_gt = 0.0, exp_le = 0.0, exp_gt = 0.0;
        for (const auto& p : sample) {
          emp_le += p.x <= cut[p.key];
          emp_gt += p.x > cut[p.key];
        }
        for (std::size_t k = 0; k < keys; ++k) {
          exp_le += law.key_probs[k] * law.x_law.cdf(cut[k]);
          exp_gt += law.key_probs[k] * (1.0 - law.x_law.cdf(cut[k]));
        }
        sup_le = std::max(sup_le, std::abs(emp_le / n - exp_le));
        sup_gt = std::max(sup_gt, std::abs(emp_gt / n - exp_gt));
      });
      const auto got = al::class_d_sup_deviation(sample, law);
      EXPECT_NEAR(got.leq, sup_le, 1e-12);
      EXPECT_NEAR(got.gt, sup_gt, 1e-12);
    }
  }
}

TEST(ClassD, SingleKeyReducesToDkwOnAtoms) {
  al::Rng rng(6);
  auto law = al::KeyedLaw::uniform(1, 10);
  const auto sample = law.sample(300, rng);
  std::vector<double> xs;
  for (const auto& p : sample) xs.push_back(p.x);
  EXPECT_NEAR(al::class_d_sup_deviation(sample, law).leq,
              al::sup_deviations(xs, law.x_law).leq, 1e-12);
}

TEST(EnvelopeFit, ExactEnvelopeHasZeroResidual) {
  const std::vector<std::size_t> keys{1, 2, 4, 8};
  std::vector<double> v;
  for (auto k : keys) v.push_back(0.7 * std::sqrt(k / 1000.0));
  const auto fit = al::fit_sqrt_envelope(keys, 1000, v);
  EXPECT_NEAR(fit.scale, 0.7, 1e-12);
  EXPECT_LT(fit.max_relative_residual, 1e-12);
  v[3] *= 1.21;
  EXPECT_GT(al::fit_sqrt_envelope(keys, 1000, v).max_relative_residual, 0.1);
}

TEST(ClassD, MedianGrowsWithKeys) {
  double prev = 0.0;
  for (std::size_t k : {1u, 4u, 16u}) {
    const double m = al::class_d_median_deviation(al::KeyedLaw::uniform(k, 20), 500, 301, 9);
    EXPECT_GT(m, prev);
    prev = m;
  }
}

}  // namespace
