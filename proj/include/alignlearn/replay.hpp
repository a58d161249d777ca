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

// Recorded interaction logs: loading, writing, shuffling and the plug-in
// instance used to score learners on real data.
//
// File format: UTF-8 CSV, header `h,b,y[,group][,q]`, `#` comment lines.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "alignlearn/core.hpp"
#include "alignlearn/csv.hpp"
#include "alignlearn/environments.hpp"

namespace alignlearn {

struct ReplayLog {
  std::vector<Observation> observations;
  // Passthrough columns; empty when absent from the file.
  std::vector<std::string> groups;
  std::vector<std::optional<double>> q;

  std::size_t size() const noexcept { return observations.size(); }
  bool has_groups() const noexcept { return !groups.empty(); }
  bool has_q() const noexcept { return !q.empty(); }

  friend bool operator==(const ReplayLog&, const ReplayLog&) = default;
};

enum class ConfidenceScale { kAuto, kUnit, kPercent };

struct ReplaySchema {
  // kAuto treats a column as percent if any value exceeds 1.
  ConfidenceScale human_scale = ConfidenceScale::kAuto;
  ConfidenceScale ai_scale = ConfidenceScale::kAuto;
};

struct LoadedReplay {
  ConfidenceGrid grid;
  ReplayLog log;
};

namespace detail {

inline std::vector<double> sorted_distinct(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline void rescale(std::vector<Observation>& obs, ConfidenceScale scale,
                    double Observation::*field, const char* name) {
  bool percent = scale == ConfidenceScale::kPercent;
  if (scale == ConfidenceScale::kAuto)
    percent = std::any_of(obs.begin(), obs.end(),
                          [&](const Observation& o) { return o.*field > 1.0; });
  for (auto& o : obs) {
    if (percent) o.*field /= 100.0;
    if (!(o.*field >= 0.0 && o.*field <= 1.0))
      throw DataError(std::string("replay: ") + name +
                      " value outside [0,1] (or [0,100])");
  }
}

}  // namespace detail

inline ConfidenceGrid grid_of(const ReplayLog& log) {
  if (log.observations.empty()) throw DataError("replay: no observations");
  std::vector<double> hs, bs;
  hs.reserve(log.size());
  bs.reserve(log.size());
  for (const auto& o : log.observations) {
    hs.push_back(o.h);
    bs.push_back(o.b);
  }
  return ConfidenceGrid(detail::sorted_distinct(std::move(hs)),
                        detail::sorted_distinct(std::move(bs)));
}

inline LoadedReplay read_replay(std::istream& in, const ReplaySchema& schema = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  int col_h = -1, col_b = -1, col_y = -1, col_group = -1, col_q = -1;
  ReplayLog log;

  auto fail = [&](const std::string& what) -> DataError {
    return DataError("replay line " + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    auto trimmed = csv::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto fields = csv::split(trimmed);
    if (header.empty()) {
      for (std::size_t k = 0; k < fields.size(); ++k) {
        const std::string name(fields[k]);
        int* slot = name == "h"       ? &col_h
                    : name == "b"     ? &col_b
                    : name == "y"     ? &col_y
                    : name == "group" ? &col_group
                    : name == "q"     ? &col_q
                                      : nullptr;
        if (slot == nullptr) throw fail("unknown column '" + name + "'");
        if (*slot >= 0) throw fail("duplicate column '" + name + "'");
        *slot = static_cast<int>(k);
        header.push_back(name);
      }
      if (col_h < 0 || col_b < 0 || col_y < 0)
        throw fail("header must contain h, b and y");
      continue;
    }
    if (fields.size() != header.size())
      throw fail("expected " + std::to_string(header.size()) + " fields, got " +
                 std::to_string(fields.size()));
    auto h = csv::parse_double(fields[col_h]);
    auto b = csv::parse_double(fields[col_b]);
    if (!h) throw fail("cannot parse h '" + std::string(fields[col_h]) + "'");
    if (!b) throw fail("cannot parse b '" + std::string(fields[col_b]) + "'");
    auto y = csv::parse_int(fields[col_y]);
    if (!y) throw fail("cannot parse y '" + std::string(fields[col_y]) + "'");
    if (*y != 0 && *y != 1) throw fail("label y must be 0 or 1");
    log.observations.push_back({*h, *b, static_cast<int>(*y)});
    if (col_group >= 0) log.groups.emplace_back(fields[col_group]);
    if (col_q >= 0) {
      if (fields[col_q].empty()) {
        log.q.emplace_back(std::nullopt);
      } else {
        auto q = csv::parse_double(fields[col_q]);
        if (!q) throw fail("cannot parse q '" + std::string(fields[col_q]) + "'");
        log.q.emplace_back(*q);
      }
    }
  }
  if (header.empty()) throw DataError("replay: missing header row");
  if (log.observations.empty()) throw DataError("replay: no data rows");

  detail::rescale(log.observations, schema.human_scale, &Observation::h, "h");
  detail::rescale(log.observations, schema.ai_scale, &Observation::b, "b");
  auto grid = grid_of(log);
  return {std::move(grid), std::move(log)};
}

inline LoadedReplay load_replay(const std::filesystem::path& path,
                                const ReplaySchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("replay: cannot open " + path.string());
  return read_replay(in, schema);
}

inline void write_replay(std::ostream& out, const ReplayLog& log) {
  out << "h,b,y";
  if (log.has_groups()) out << ",group";
  if (log.has_q()) out << ",q";
  out << '\n';
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto& o = log.observations[k];
    out << csv::format_number(o.h) << ',' << csv::format_number(o.b) << ','
        << o.y;
    if (log.has_groups()) out << ',' << log.groups[k];
    if (log.has_q()) {
      out << ',';
      if (log.q[k]) out << csv::format_number(*log.q[k]);
    }
    out << '\n';
  }
}

inline void write_replay(const std::filesystem::path& path, const ReplayLog& log) {
  std::ofstream out(path);
  if (!out) throw DataError("replay: cannot write " + path.string());
  write_replay(out, log);
}

// Uniform permutation of rows (passthrough columns move with their row).
inline ReplayLog shuffle_replay(const ReplayLog& log, std::uint64_t seed) {
  std::vector<std::size_t> order(log.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  ReplayLog out;
  out.observations.reserve(log.size());
  for (auto k : order) {
    out.observations.push_back(log.observations[k]);
    if (log.has_groups()) out.groups.push_back(log.groups[k]);
    if (log.has_q()) out.q.push_back(log.q[k]);
  }
  return out;
}

// Rows whose group column equals `group`.
inline ReplayLog filter_group(const ReplayLog& log, const std::string& group) {
  if (!log.has_groups()) throw DataError("replay: no group column to filter on");
  ReplayLog out;
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (log.groups[k] != group) continue;
    out.observations.push_back(log.observations[k]);
    out.groups.push_back(log.groups[k]);
    if (log.has_q()) out.q.push_back(log.q[k]);
  }
  return out;
}

// Per-cell observation and positive-label counts over a grid.
struct CellCounts {
  ConfidenceGrid grid;
  std::vector<std::int64_t> count;
  std::vector<std::int64_t> positives;

  explicit CellCounts(ConfidenceGrid g)
      : grid(std::move(g)),
        count(grid.num_cells(), 0),
        positives(grid.num_cells(), 0) {}

  std::size_t cell(std::size_t i, std::size_t j) const noexcept {
    return i * grid.num_ai() + j;
  }
  std::int64_t n(std::size_t i, std::size_t j) const { return count[cell(i, j)]; }
  std::int64_t total() const {
    return std::accumulate(count.begin(), count.end(), std::int64_t{0});
  }
  // Empirical P(Y=1 | h_i, b_j); nullopt for unseen cells.
  std::optional<double> p_hat(std::size_t i, std::size_t j) const {
    const auto c = cell(i, j);
    if (count[c] == 0) return std::nullopt;
    return static_cast<double>(positives[c]) / static_cast<double>(count[c]);
  }
};

inline CellCounts tabulate(const ConfidenceGrid& grid, const ReplayLog& log) {
  CellCounts counts(grid);
  for (const auto& o : log.observations) {
    auto i = grid.human_index(o.h);
    auto j = grid.ai_index(o.b);
    if (!i || !j) throw DataError("replay: observation outside declared grid");
    const auto c = counts.cell(*i, *j);
    ++counts.count[c];
    counts.positives[c] += o.y;
  }
  return counts;
}

// Empirical joint and P(Y=1|h,b) over the full log. Unseen cells get
// P(Y=1) = 0 so the derived optimal policy decides 0 there.
inline Instance plugin_instance(const CellCounts& counts,
                                const UtilityTable& utility) {
  const auto total = counts.total();
  if (total == 0) throw DataError("replay: no observations");
  std::vector<double> joint(counts.count.size()), cond(counts.count.size());
  for (std::size_t c = 0; c < counts.count.size(); ++c) {
    joint[c] = static_cast<double>(counts.count[c]) / static_cast<double>(total);
    cond[c] = counts.count[c] == 0 ? 0.0
                                   : static_cast<double>(counts.positives[c]) /
                                         static_cast<double>(counts.count[c]);
  }
  return Instance(counts.grid, std::move(joint), std::move(cond), utility);
}

}  // namespace alignlearn
