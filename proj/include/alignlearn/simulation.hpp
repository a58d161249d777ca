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

// Simulation driver shared by synthetic runs and dataset replays.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "alignlearn/analysis.hpp"
#include "alignlearn/core.hpp"
#include "alignlearn/environments.hpp"
#include "alignlearn/learners.hpp"

namespace alignlearn {

// T draws from the instance; the stream depends only on (instance, seed).
inline std::vector<Observation> draw_stream(const Instance& instance,
                                            std::int64_t horizon,
                                            std::uint64_t seed) {
  if (horizon < 0) throw ConfigError("horizon must be nonnegative");
  Rng rng(seed);
  StepSampler sampler(instance);
  std::vector<Observation> stream(static_cast<std::size_t>(horizon));
  for (auto& o : stream) o = sampler(rng);
  return stream;
}

// Feeds the stream to the learner with the decide-then-observe protocol and
// scores each decision against `scoring` (exact or plug-in instance).
inline RunTrace run_learner(Learner& learner,
                            const std::vector<Observation>& stream,
                            const Instance& scoring, std::uint64_t seed) {
  RunTrace trace;
  trace.seed = seed;
  trace.learner_id = std::visit([](const auto& l) { return l.id(); }, learner);
  trace.steps.reserve(stream.size());
  for (const auto& obs : stream) {
    const int a = std::visit([&](const auto& l) { return l.step(obs.h, obs.b); },
                             learner);
    trace.append(obs, a, instantaneous_regret(scoring, obs.h, obs.b, a));
    std::visit([&](auto& l) { l.observe(obs); }, learner);
  }
  return trace;
}

inline RunTrace run_learner(const std::string& name,
                            const std::vector<Observation>& stream,
                            const Instance& scoring, std::uint64_t seed) {
  Learner learner = make_learner(name, scoring.utility());
  return run_learner(learner, stream, scoring, seed);
}

}  // namespace alignlearn
