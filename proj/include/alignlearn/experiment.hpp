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

// Experiment configuration, the end-to-end runner and the on-disk formats:
//
//   <out>/<learner>/seed-<k>.csv   t,h,b,y,action,inst_regret,cum_regret
//   <out>/<learner>/curve.csv      t,mean_cum_regret,ci_halfwidth,n_seeds
//   <out>/alignment.json
//   <out>/manifest.json

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "alignlearn/analysis.hpp"
#include "alignlearn/core.hpp"
#include "alignlearn/csv.hpp"
#include "alignlearn/environments.hpp"
#include "alignlearn/learners.hpp"
#include "alignlearn/replay.hpp"
#include "alignlearn/simulation.hpp"

#ifndef ALIGNLEARN_VERSION
#define ALIGNLEARN_VERSION "0.1.0"
#endif

namespace alignlearn {

using Json = nlohmann::ordered_json;

enum class Mode { kSyntheticAligned, kSyntheticHard, kReplay };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::kSyntheticAligned: return "synthetic-aligned";
    case Mode::kSyntheticHard: return "synthetic-hard";
    case Mode::kReplay: return "replay";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "synthetic-aligned") return Mode::kSyntheticAligned;
  if (s == "synthetic-hard") return Mode::kSyntheticHard;
  if (s == "replay") return Mode::kReplay;
  throw ConfigError("unknown mode '" + s + "'");
}

inline std::string to_string(LinkKind k) {
  return k == LinkKind::kLogistic ? "logistic" : "piecewise-linear";
}
inline std::string to_string(JointKind k) {
  return k == JointKind::kUniform ? "uniform" : "product";
}
inline std::string to_string(ConfidenceScale s) {
  switch (s) {
    case ConfidenceScale::kAuto: return "auto";
    case ConfidenceScale::kUnit: return "unit";
    case ConfidenceScale::kPercent: return "percent";
  }
  return "?";
}
inline ConfidenceScale parse_scale(const std::string& s) {
  if (s == "auto") return ConfidenceScale::kAuto;
  if (s == "unit") return ConfidenceScale::kUnit;
  if (s == "percent") return ConfidenceScale::kPercent;
  throw ConfigError("unknown confidence scale '" + s + "'");
}

inline std::string utility_string(const UtilityTable& u) {
  return csv::format_number(u.u11) + "," + csv::format_number(u.u10) + "," +
         csv::format_number(u.u00) + "," + csv::format_number(u.u01);
}

struct ExperimentConfig {
  Mode mode = Mode::kSyntheticAligned;
  // Horizon; in replay mode 0 means "the whole log".
  std::int64_t horizon = 1000;
  std::int64_t seeds = 100;
  std::uint64_t base_seed = 0;
  std::vector<std::string> learners{"aligned", "vanilla"};
  UtilityTable utility = UtilityTable::symmetric();
  std::filesystem::path out = "out";
  int threads = 1;
  bool write_traces = true;

  AlignedInstanceSpec aligned;
  HardInstanceSpec hard;
  // Negative epsilon ("auto") selects scale * sqrt(|H||B|/T).
  double hard_epsilon = -1.0;
  double hard_epsilon_scale = 1.0;

  std::filesystem::path dataset;
  std::string group;
  ReplaySchema schema;

  void validate() const {
    if (horizon < 0 || (mode != Mode::kReplay && horizon < 1))
      throw ConfigError("T must be >= 1");
    if (seeds < 1) throw ConfigError("seeds must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (learners.empty()) throw ConfigError("at least one learner is required");
    for (const auto& l : learners) (void)make_learner(l, UtilityTable{});
    if (!utility.satisfies_ordering())
      throw ConfigError("utility violates u11>u10, u11>u01, u00>u10, u00>u01");
    if (mode == Mode::kReplay && dataset.empty())
      throw ConfigError("replay mode requires a dataset path");
    if (hard_epsilon >= 0.5) throw ConfigError("hard.epsilon must be < 1/2");
  }
};

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["mode"] = to_string(c.mode);
  j["T"] = c.horizon;
  j["seeds"] = c.seeds;
  j["base_seed"] = c.base_seed;
  j["learners"] = c.learners;
  j["utility"] = utility_string(c.utility);
  j["out"] = c.out.string();
  j["threads"] = c.threads;
  j["write_traces"] = c.write_traces;
  j["aligned"] = {{"human_levels", c.aligned.human_levels},
                  {"ai_levels", c.aligned.ai_levels},
                  {"link", to_string(c.aligned.link)},
                  {"kappa", c.aligned.kappa},
                  {"human_weight", c.aligned.human_weight},
                  {"joint", to_string(c.aligned.joint)},
                  {"seed", c.aligned.seed}};
  j["hard"] = {{"human_levels", c.hard.human_levels},
               {"ai_levels", c.hard.ai_levels},
               {"epsilon", c.hard_epsilon < 0.0 ? Json("auto") : Json(c.hard_epsilon)},
               {"epsilon_scale", c.hard_epsilon_scale},
               {"seed", c.hard.seed}};
  j["replay"] = {{"dataset", c.dataset.string()},
                 {"group", c.group},
                 {"human_scale", to_string(c.schema.human_scale)},
                 {"ai_scale", to_string(c.schema.ai_scale)}};
  return j;
}

namespace detail {

template <class T>
T get_as(const Json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

inline UtilityTable utility_from_json(const Json& v) {
  if (v.is_string()) return UtilityTable::parse(v.get<std::string>());
  if (v.is_array() && v.size() == 4) {
    try {
      UtilityTable u{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
                     v[3].get<double>()};
      if (!u.satisfies_ordering())
        throw ConfigError("utility violates the payoff ordering");
      return u;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("utility: ") + e.what());
    }
  }
  throw ConfigError("utility must be \"u11,u10,u00,u01\" or a 4-array");
}

// Every key in `patch` must already exist in `base`; objects merge
// recursively, everything else replaces.
inline void merge_strict(Json& base, const Json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (base[key].is_object()) {
      merge_strict(base[key], value, path);
    } else {
      base[key] = value;
    }
  }
}

inline void collect_leaves(const Json& doc, const std::string& prefix,
                           std::vector<std::string>& out) {
  for (const auto& [key, value] : doc.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      collect_leaves(value, path, out);
    } else {
      out.push_back(path);
    }
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const Json& doc) {
  using detail::get_as;
  ExperimentConfig c;
  Json full = to_json(c);
  detail::merge_strict(full, doc, "");
  c.mode = parse_mode(get_as<std::string>(full, "mode"));
  c.horizon = get_as<std::int64_t>(full, "T");
  c.seeds = get_as<std::int64_t>(full, "seeds");
  c.base_seed = get_as<std::uint64_t>(full, "base_seed");
  c.learners = get_as<std::vector<std::string>>(full, "learners");
  c.utility = detail::utility_from_json(full.at("utility"));
  c.out = get_as<std::string>(full, "out");
  c.threads = get_as<int>(full, "threads");
  c.write_traces = get_as<bool>(full, "write_traces");
  const Json& a = full.at("aligned");
  c.aligned.human_levels = get_as<std::size_t>(a, "human_levels");
  c.aligned.ai_levels = get_as<std::size_t>(a, "ai_levels");
  c.aligned.link = parse_link(get_as<std::string>(a, "link"));
  c.aligned.kappa = get_as<double>(a, "kappa");
  c.aligned.human_weight = get_as<double>(a, "human_weight");
  c.aligned.joint = parse_joint(get_as<std::string>(a, "joint"));
  c.aligned.seed = get_as<std::uint64_t>(a, "seed");
  const Json& h = full.at("hard");
  c.hard.human_levels = get_as<std::size_t>(h, "human_levels");
  c.hard.ai_levels = get_as<std::size_t>(h, "ai_levels");
  if (h.at("epsilon").is_string()) {
    if (h.at("epsilon").get<std::string>() != "auto")
      throw ConfigError("hard.epsilon must be a number or \"auto\"");
    c.hard_epsilon = -1.0;
  } else {
    c.hard_epsilon = get_as<double>(h, "epsilon");
    if (c.hard_epsilon < 0.0) throw ConfigError("hard.epsilon must be >= 0");
  }
  c.hard_epsilon_scale = get_as<double>(h, "epsilon_scale");
  c.hard.seed = get_as<std::uint64_t>(h, "seed");
  const Json& r = full.at("replay");
  c.dataset = get_as<std::string>(r, "dataset");
  c.group = get_as<std::string>(r, "group");
  c.schema.human_scale = parse_scale(get_as<std::string>(r, "human_scale"));
  c.schema.ai_scale = parse_scale(get_as<std::string>(r, "ai_scale"));
  c.aligned.utility = c.utility;
  return c;
}

// Dotted names of every configurable key, e.g. "aligned.kappa".
inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  detail::collect_leaves(to_json(ExperimentConfig{}), "", keys);
  return keys;
}

// Sets a dotted key from command-line text. Text that parses as JSON is used
// as such (numbers, booleans, arrays); anything else is taken as a string.
inline void apply_override(Json& doc, const std::string& dotted,
                           const std::string& text) {
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (dotted == "learners" && value.is_string()) {
    std::vector<std::string> names;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) names.push_back(item);
    value = names;
  }
  if (dotted == "utility" || dotted == "out" || dotted == "replay.dataset" ||
      dotted == "replay.group")
    value = text;
  Json* node = &doc;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t k = 0; k + 1 < parts.size(); ++k) node = &(*node)[parts[k]];
  (*node)[parts.back()] = value;
}

// Reads a config document; a manifest written by a previous run is accepted
// and its embedded config is used.
inline Json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json doc = Json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  if (doc.contains("config") && doc.contains("version")) return doc["config"];
  return doc;
}

// ---------------------------------------------------------------------------
// CSV and JSON artifacts

inline void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "t,h,b,y,action,inst_regret,cum_regret\n";
  for (const auto& s : trace.steps)
    out << s.t << ',' << csv::format_number(s.h) << ',' << csv::format_number(s.b)
        << ',' << s.y << ',' << s.action << ',' << csv::format_number(s.inst_regret)
        << ',' << csv::format_number(s.cum_regret) << '\n';
}

inline RunTrace read_trace_csv(std::istream& in) {
  RunTrace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (csv::trim(line) != "t,h,b,y,action,inst_regret,cum_regret")
        throw DataError("trace: unexpected header");
      continue;
    }
    if (csv::trim(line).empty()) continue;
    auto f = csv::split(line);
    auto fail = [&] { return DataError("trace line " + std::to_string(line_no) + ": malformed"); };
    if (f.size() != 7) throw fail();
    auto t = csv::parse_int(f[0]);
    auto h = csv::parse_double(f[1]);
    auto b = csv::parse_double(f[2]);
    auto y = csv::parse_int(f[3]);
    auto a = csv::parse_int(f[4]);
    auto r = csv::parse_double(f[5]);
    auto cr = csv::parse_double(f[6]);
    if (!t || !h || !b || !y || !a || !r || !cr) throw fail();
    trace.steps.push_back({*t, *h, *b, static_cast<int>(*y), static_cast<int>(*a), *r, *cr});
  }
  return trace;
}

inline void write_curve_csv(std::ostream& out, const RegretCurve& curve) {
  out << "t,mean_cum_regret,ci_halfwidth,n_seeds\n";
  for (std::size_t t = 0; t < curve.mean.size(); ++t)
    out << (t + 1) << ',' << csv::format_number(curve.mean[t]) << ','
        << csv::format_number(curve.ci_halfwidth[t]) << ',' << curve.n_seeds << '\n';
}

inline RegretCurve read_curve_csv(std::istream& in) {
  RegretCurve curve;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (csv::trim(line) != "t,mean_cum_regret,ci_halfwidth,n_seeds")
        throw DataError("curve: unexpected header");
      continue;
    }
    if (csv::trim(line).empty()) continue;
    auto f = csv::split(line);
    if (f.size() != 4) throw DataError("curve line " + std::to_string(line_no) + ": malformed");
    auto m = csv::parse_double(f[1]);
    auto ci = csv::parse_double(f[2]);
    auto ns = csv::parse_int(f[3]);
    if (!m || !ci || !ns) throw DataError("curve line " + std::to_string(line_no) + ": malformed");
    curve.mean.push_back(*m);
    curve.ci_halfwidth.push_back(*ci);
    curve.n_seeds = *ns;
  }
  curve.horizon = static_cast<std::int64_t>(curve.mean.size());
  curve.ci_defined = curve.n_seeds > 1;
  return curve;
}

inline Json to_json(const AlignmentReport& r, const ConfidenceGrid& grid) {
  Json j;
  j["source"] = r.source;
  j["mae"] = r.metrics.mae;
  j["eae"] = r.metrics.eae;
  j["human_levels"] = grid.human_levels();
  j["ai_levels"] = grid.ai_levels();
  j["unseen_cells"] = r.unseen_cells;
  j["low_count_threshold"] = kLowCountThreshold;
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json e{{"h", c.h}, {"b", c.b}, {"p1", c.p1}};
    e["count"] = c.count ? Json(*c.count) : Json(nullptr);
    e["positives"] = c.positives ? Json(*c.positives) : Json(nullptr);
    e["low_count"] = c.low_count;
    cells.push_back(std::move(e));
  }
  j["cells"] = std::move(cells);
  Json viol = Json::array();
  for (const auto& v : r.violations) {
    Json e{{"h", v.h},         {"b_low", v.b_low}, {"b_high", v.b_high},
           {"p_low", v.p_low}, {"p_high", v.p_high}, {"gap", v.gap}};
    e["count_low"] = v.count_low ? Json(*v.count_low) : Json(nullptr);
    e["count_high"] = v.count_high ? Json(*v.count_high) : Json(nullptr);
    viol.push_back(std::move(e));
  }
  j["violations"] = std::move(viol);
  return j;
}

// Distinct AI levels observed at each human level.
inline Json per_h_support(const CellCounts& counts) {
  Json j = Json::array();
  const auto& g = counts.grid;
  for (std::size_t i = 0; i < g.num_human(); ++i) {
    std::vector<double> bs;
    for (std::size_t j2 = 0; j2 < g.num_ai(); ++j2)
      if (counts.n(i, j2) > 0) bs.push_back(g.ai_levels()[j2]);
    j.push_back({{"h", g.human_levels()[i]}, {"ai_levels", bs}});
  }
  return j;
}

inline Json cuts_json(const ThresholdPolicy& p) {
  Json j = Json::array();
  for (std::size_t i = 0; i < p.cuts().size(); ++i) {
    const double c = p.cuts()[i];
    Json cut = c == kAboveMax ? Json("above-max") : c == kBelowMin ? Json("below-min") : Json(c);
    j.push_back({{"h", p.human_levels()[i]}, {"cut", cut}});
  }
  return j;
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Runner

struct ExperimentResult {
  std::vector<RegretCurve> curves;  // one per learner, config order
  std::vector<std::vector<double>> final_regrets;  // [learner][replica]
  Json alignment;
  Json manifest;
};

namespace detail {

struct Environment {
  std::optional<Instance> instance;  // scoring instance (exact or plug-in)
  std::optional<ReplayLog> log;
  std::optional<CellCounts> counts;
};

inline Environment build_environment(const ExperimentConfig& c) {
  Environment env;
  switch (c.mode) {
    case Mode::kSyntheticAligned: {
      auto spec = c.aligned;
      spec.utility = c.utility;
      env.instance = sample_aligned(spec);
      break;
    }
    case Mode::kSyntheticHard: {
      auto spec = c.hard;
      spec.epsilon = c.hard_epsilon >= 0.0
                         ? c.hard_epsilon
                         : hard_instance_epsilon(spec.human_levels * spec.ai_levels,
                                                 c.horizon, c.hard_epsilon_scale);
      env.instance = sample_hard_instance(spec);
      break;
    }
    case Mode::kReplay: {
      auto loaded = load_replay(c.dataset, c.schema);
      ReplayLog log = std::move(loaded.log);
      if (!c.group.empty()) log = filter_group(log, c.group);
      if (log.size() == 0) throw DataError("replay: group '" + c.group + "' has no rows");
      auto grid = grid_of(log);
      env.counts = tabulate(grid, log);
      env.instance = plugin_instance(*env.counts, c.utility);
      env.log = std::move(log);
      break;
    }
  }
  return env;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  auto env = detail::build_environment(config);
  const Instance& scoring = *env.instance;

  std::int64_t horizon = config.horizon;
  if (config.mode == Mode::kReplay) {
    const auto n = static_cast<std::int64_t>(env.log->size());
    if (horizon == 0) horizon = n;
    if (horizon > n)
      throw ConfigError("T exceeds the number of replay rows (" + std::to_string(n) + ")");
  }

  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + config.out.string());
  for (const auto& l : config.learners) {
    std::filesystem::create_directories(config.out / l, ec);
    if (ec) throw ConfigError("cannot create output directory " + (config.out / l).string());
  }

  const std::size_t replicas = static_cast<std::size_t>(config.seeds);
  const std::size_t nl = config.learners.size();
  std::vector<std::vector<RunTrace>> traces(nl, std::vector<RunTrace>(replicas));

  auto run_replica = [&](std::size_t r) {
    const std::uint64_t seed = config.base_seed + r;
    std::vector<Observation> stream;
    if (config.mode == Mode::kReplay) {
      auto shuffled = shuffle_replay(*env.log, seed);
      stream.assign(shuffled.observations.begin(),
                    shuffled.observations.begin() + horizon);
    } else {
      stream = draw_stream(scoring, horizon, seed);
    }
    for (std::size_t k = 0; k < nl; ++k) {
      auto trace = run_learner(config.learners[k], stream, scoring, seed);
      trace.learner_id = config.learners[k];
      if (config.write_traces) {
        const auto path = config.out / config.learners[k] /
                          ("seed-" + std::to_string(seed) + ".csv");
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write " + path.string());
        write_trace_csv(out, trace);
      }
      traces[k][r] = std::move(trace);
    }
  };

  // Replicas are independent; results land in per-index slots and are
  // aggregated in seed order after the join.
  const std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(config.threads), replicas);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < replicas; r = next++) {
          try {
            run_replica(r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result;
  for (std::size_t k = 0; k < nl; ++k) {
    auto curve = aggregate_curves(traces[k]);
    curve.learner_id = config.learners[k];
    std::ofstream out(config.out / config.learners[k] / "curve.csv");
    if (!out) throw ConfigError("cannot write curve for " + config.learners[k]);
    write_curve_csv(out, curve);
    std::vector<double> finals;
    for (const auto& tr : traces[k]) finals.push_back(tr.final_regret());
    result.final_regrets.push_back(std::move(finals));
    result.curves.push_back(std::move(curve));
  }

  if (env.counts) {
    result.alignment = to_json(monotonicity_report(*env.counts), env.counts->grid);
    result.alignment["per_h_support"] = per_h_support(*env.counts);
  } else {
    result.alignment = to_json(monotonicity_report(scoring), scoring.grid());
  }
  write_json_file(config.out / "alignment.json", result.alignment);

  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  const std::time_t wall = std::chrono::system_clock::to_time_t(started);
  std::ostringstream stamp;
  stamp << std::put_time(std::gmtime(&wall), "%Y-%m-%dT%H:%M:%SZ");
  Json manifest;
  manifest["version"] = ALIGNLEARN_VERSION;
  manifest["started_at"] = stamp.str();
  manifest["wall_time_seconds"] = elapsed.count();
  manifest["config"] = to_json(config);
  manifest["T_effective"] = horizon;
  std::vector<std::uint64_t> seeds;
  for (std::size_t r = 0; r < replicas; ++r) seeds.push_back(config.base_seed + r);
  manifest["seed_list"] = seeds;
  manifest["optimal_policy"] = cuts_json(optimal_policy(scoring));
  Json finals = Json::object();
  for (std::size_t k = 0; k < nl; ++k)
    finals[config.learners[k]] = {{"mean_final_regret", result.curves[k].mean.back()},
                                  {"ci_halfwidth", result.curves[k].ci_halfwidth.back()}};
  manifest["summary"] = finals;
  write_json_file(config.out / "manifest.json", manifest);
  result.manifest = std::move(manifest);
  return result;
}

}  // namespace alignlearn
