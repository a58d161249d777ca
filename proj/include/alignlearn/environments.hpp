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

// Synthetic environments: perfectly aligned instances, the hard-instance
// family used for lower-bound experiments, and stream sampling.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "alignlearn/core.hpp"

namespace alignlearn {

using Rng = std::mt19937_64;

enum class LinkKind { kLogistic, kPiecewiseLinear };
enum class JointKind { kUniform, kProduct };

inline LinkKind parse_link(const std::string& s) {
  if (s == "logistic") return LinkKind::kLogistic;
  if (s == "piecewise-linear" || s == "linear") return LinkKind::kPiecewiseLinear;
  throw ConfigError("unknown link '" + s + "'");
}

inline JointKind parse_joint(const std::string& s) {
  if (s == "uniform") return JointKind::kUniform;
  if (s == "product") return JointKind::kProduct;
  throw ConfigError("unknown joint '" + s + "'");
}

struct AlignedInstanceSpec {
  std::size_t human_levels = 4;
  std::size_t ai_levels = 13;
  LinkKind link = LinkKind::kLogistic;
  // Logistic link: P(Y=1|h,b) = sigmoid(kappa * (h + b - 1)).
  double kappa = 4.0;
  // Piecewise-linear link: P(Y=1|h,b) = clamp(b + human_weight * (h - 0.5)).
  double human_weight = 1.0;
  JointKind joint = JointKind::kUniform;
  std::uint64_t seed = 0;
  UtilityTable utility = UtilityTable::symmetric();
};

// Both links are nondecreasing in h and in b, so the result is perfectly
// aligned on any grid.
inline Instance sample_aligned(const AlignedInstanceSpec& spec) {
  if (spec.human_levels == 0 || spec.ai_levels == 0)
    throw ConfigError("aligned instance: grid sizes must be at least 1");
  if (spec.link == LinkKind::kLogistic && !(spec.kappa > 0.0))
    throw ConfigError("aligned instance: kappa must be positive");
  if (spec.link == LinkKind::kPiecewiseLinear && !(spec.human_weight >= 0.0))
    throw ConfigError("aligned instance: human_weight must be nonnegative");

  auto grid = ConfidenceGrid::midpoints(spec.human_levels, spec.ai_levels);
  const auto& hs = grid.human_levels();
  const auto& bs = grid.ai_levels();

  std::vector<double> cond;
  cond.reserve(grid.num_cells());
  for (double h : hs) {
    for (double b : bs) {
      double p = 0.0;
      if (spec.link == LinkKind::kLogistic) {
        p = 1.0 / (1.0 + std::exp(-spec.kappa * (h + b - 1.0)));
      } else {
        p = std::clamp(b + spec.human_weight * (h - 0.5), 0.0, 1.0);
      }
      cond.push_back(p);
    }
  }

  std::vector<double> joint(grid.num_cells());
  if (spec.joint == JointKind::kUniform) {
    std::fill(joint.begin(), joint.end(),
              1.0 / static_cast<double>(grid.num_cells()));
  } else {
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> weight(0.5, 1.5);
    auto marginal = [&](std::size_t n) {
      std::vector<double> w(n);
      double total = 0.0;
      for (auto& x : w) total += (x = weight(rng));
      for (auto& x : w) x /= total;
      return w;
    };
    const auto ph = marginal(hs.size());
    const auto pb = marginal(bs.size());
    for (std::size_t i = 0; i < hs.size(); ++i)
      for (std::size_t j = 0; j < bs.size(); ++j)
        joint[i * bs.size() + j] = ph[i] * pb[j];
  }
  return Instance(std::move(grid), std::move(joint), std::move(cond),
                  spec.utility);
}

struct HardInstanceSpec {
  std::size_t human_levels = 4;
  std::size_t ai_levels = 8;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
};

// epsilon = scale * sqrt(|H||B| / T), capped just below 1/2.
inline double hard_instance_epsilon(std::size_t contexts, std::int64_t horizon,
                                    double scale = 1.0) {
  if (contexts == 0 || horizon < 1)
    throw ConfigError("hard instance: need contexts >= 1 and T >= 1");
  const double eps = scale * std::sqrt(static_cast<double>(contexts) /
                                       static_cast<double>(horizon));
  return std::min(eps, std::nextafter(0.5, 0.0));
}

// Uniform contexts; in each, a uniformly drawn decision beats the other by
// exactly epsilon in normalized utility (u = (1,0,1,0), P(Y=1) = 1/2 +- eps/2).
inline Instance sample_hard_instance(const HardInstanceSpec& spec) {
  if (!(spec.epsilon >= 0.0 && spec.epsilon < 0.5))
    throw ConfigError("hard instance: epsilon must lie in [0, 1/2)");
  auto grid = ConfidenceGrid::midpoints(spec.human_levels, spec.ai_levels);
  Rng rng(spec.seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> cond(grid.num_cells());
  for (auto& p : cond) p = coin(rng) ? 0.5 + spec.epsilon / 2.0
                                     : 0.5 - spec.epsilon / 2.0;
  std::vector<double> joint(grid.num_cells(),
                            1.0 / static_cast<double>(grid.num_cells()));
  return Instance(std::move(grid), std::move(joint), std::move(cond),
                  UtilityTable{1.0, 0.0, 1.0, 0.0});
}

// Draws (h, b) from the joint and y from P(Y=1 | h, b).
class StepSampler {
 public:
  explicit StepSampler(const Instance& instance)
      : instance_(&instance),
        cells_(instance.joint().begin(), instance.joint().end()) {}

  Observation operator()(Rng& rng) {
    const std::size_t c = cells_(rng);
    const std::size_t nb = instance_->grid().num_ai();
    const std::size_t i = c / nb;
    const std::size_t j = c % nb;
    std::bernoulli_distribution label(instance_->cond(i, j));
    return {instance_->grid().human_levels()[i],
            instance_->grid().ai_levels()[j], label(rng) ? 1 : 0};
  }

 private:
  const Instance* instance_;
  std::discrete_distribution<std::size_t> cells_;
};

inline Observation draw_step(const Instance& instance, Rng& rng) {
  return StepSampler(instance)(rng);
}

}  // namespace alignlearn
