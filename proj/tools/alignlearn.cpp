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

// Command-line front end: run, report, coverage, bound.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "alignlearn/analysis.hpp"
#include "alignlearn/core.hpp"
#include "alignlearn/deviation.hpp"
#include "alignlearn/experiment.hpp"
#include "alignlearn/replay.hpp"

namespace al = alignlearn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct RunArgs {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::int64_t> seeds;
  std::optional<std::int64_t> horizon;
  std::vector<std::string> learners;
  std::optional<std::string> dataset;
  std::optional<std::string> utility;
  std::map<std::string, std::string> dotted;
};

int do_run(const RunArgs& args) {
  al::Json doc = args.config.empty() ? al::Json::object()
                                     : al::read_config_document(args.config);
  for (const auto& [key, text] : args.dotted) al::apply_override(doc, key, text);
  if (args.out) doc["out"] = *args.out;
  if (args.seeds) doc["seeds"] = *args.seeds;
  if (args.horizon) doc["T"] = *args.horizon;
  if (!args.learners.empty()) doc["learners"] = args.learners;
  if (args.utility) doc["utility"] = *args.utility;
  if (args.dataset) {
    doc["replay"]["dataset"] = *args.dataset;
    if (!doc.contains("mode")) doc["mode"] = "replay";
  }
  const auto config = al::config_from_json(doc);
  const auto result = al::run_experiment(config);
  for (std::size_t k = 0; k < result.curves.size(); ++k) {
    const auto& c = result.curves[k];
    std::cout << c.learner_id << ": mean_final_regret=" << al::csv::format_number(c.mean.back())
              << " ci_halfwidth=" << al::csv::format_number(c.ci_halfwidth.back())
              << " seeds=" << c.n_seeds << '\n';
  }
  std::cout << "wrote " << config.out.string() << '\n';
  return 0;
}

struct ReportArgs {
  std::string dataset;
  std::string out;
  std::string group;
  std::string human_scale = "auto";
  std::string ai_scale = "auto";
};

al::CellCounts load_counts(const std::string& path, const std::string& group,
                           const al::ReplaySchema& schema) {
  auto loaded = al::load_replay(path, schema);
  al::ReplayLog log = std::move(loaded.log);
  if (!group.empty()) log = al::filter_group(log, group);
  if (log.size() == 0) throw al::DataError("no rows for group '" + group + "'");
  return al::tabulate(al::grid_of(log), log);
}

int do_report(const ReportArgs& args) {
  al::ReplaySchema schema;
  schema.human_scale = al::parse_scale(args.human_scale);
  schema.ai_scale = al::parse_scale(args.ai_scale);
  const auto counts = load_counts(args.dataset, args.group, schema);
  const auto report = al::monotonicity_report(counts);
  auto j = al::to_json(report, counts.grid);
  j["per_h_support"] = al::per_h_support(counts);
  j["rows"] = counts.total();
  if (args.out.empty()) {
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::error_code ec;
  std::filesystem::create_directories(args.out, ec);
  if (ec) throw al::ConfigError("cannot create output directory " + args.out);
  al::write_json_file(std::filesystem::path(args.out) / "alignment.json", j);
  std::cout << "rows=" << counts.total() << " mae=" << al::csv::format_number(report.metrics.mae)
            << " eae=" << al::csv::format_number(report.metrics.eae)
            << " violations=" << report.violations.size()
            << " unseen_cells=" << report.unseen_cells << '\n';
  return 0;
}

struct CoverageArgs {
  std::vector<std::int64_t> ns{50, 200, 1000};
  std::vector<double> eps{0.05, 0.1, 0.2};
  std::int64_t trials = 10000;
  std::uint64_t seed = 1;
  std::string law = "uniform";
  std::size_t levels = 10;
  bool class_d = false;
  std::vector<std::size_t> keys{1, 2, 4, 8};
  std::size_t x_levels = 50;
};

int do_coverage(const CoverageArgs& args) {
  if (args.trials < 1) throw al::ConfigError("--trials must be >= 1");
  if (args.class_d) {
    if (args.ns.size() != 1) throw al::ConfigError("--class-d takes a single --n");
    const auto n = args.ns.front();
    std::vector<double> medians;
    for (auto k : args.keys)
      medians.push_back(al::class_d_median_deviation(al::KeyedLaw::uniform(k, args.x_levels), n,
                                                     args.trials, args.seed + k));
    const auto fit = al::fit_sqrt_envelope(args.keys, n, medians);
    std::cout << "keys,n,trials,median_sup,fitted,relative_residual\n";
    for (std::size_t i = 0; i < args.keys.size(); ++i) {
      const double fitted = fit.scale * std::sqrt(static_cast<double>(args.keys[i]) /
                                                  static_cast<double>(n));
      std::cout << args.keys[i] << ',' << n << ',' << args.trials << ','
                << al::csv::format_number(medians[i]) << ',' << al::csv::format_number(fitted)
                << ',' << al::csv::format_number(fit.relative_residuals[i]) << '\n';
    }
    std::cout << "# C=" << al::csv::format_number(fit.scale) << '\n';
    return 0;
  }
  std::cout << "n,eps,trials,exceed_leq,exceed_gt,bound,slack,within_bound\n";
  std::uint64_t seed = args.seed;
  for (auto n : args.ns)
    for (double e : args.eps) {
      al::CoverageResult r;
      if (args.law == "uniform") {
        r = al::dkw_coverage_test(al::UniformLaw{}, n, e, args.trials, seed++);
      } else if (args.law == "discrete") {
        r = al::dkw_coverage_test(al::DiscreteLaw::uniform_grid(args.levels), n, e, args.trials,
                                  seed++);
      } else {
        throw al::ConfigError("unknown law '" + args.law + "'");
      }
      std::cout << n << ',' << al::csv::format_number(e) << ',' << r.trials << ','
                << al::csv::format_number(r.exceed_leq) << ','
                << al::csv::format_number(r.exceed_gt) << ','
                << al::csv::format_number(r.bound) << ','
                << al::csv::format_number(r.slack()) << ',' << (r.within_bound() ? 1 : 0)
                << '\n';
    }
  return 0;
}

struct BoundArgs {
  std::optional<double> mae;
  std::string dataset;
  std::string group;
  std::string utility = "1,0,1,0";
};

int do_bound(const BoundArgs& args) {
  const auto u = al::UtilityTable::parse(args.utility);
  double mae = 0.0;
  if (args.mae) {
    mae = *args.mae;
  } else if (!args.dataset.empty()) {
    mae = al::mae_eae(load_counts(args.dataset, args.group, {})).mae;
  } else {
    throw al::ConfigError("bound needs --mae or --dataset");
  }
  if (mae < 0.0) throw al::ConfigError("--mae must be >= 0");
  const auto un = u.normalized();
  const double gap = al::suboptimality_bound(mae, un);
  std::cout << "mae=" << al::csv::format_number(mae)
            << " normalized_utility=" << al::utility_string(un)
            << " bound_normalized=" << al::csv::format_number(gap)
            << " bound=" << al::csv::format_number(gap * u.span()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alignlearn: online threshold learning under human/AI confidence alignment"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ALIGNLEARN_VERSION));

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run learners over seeded replicas");
  run_cmd->add_option("--config", run.config, "JSON config or a previous manifest");
  run_cmd->add_option("--out", run.out, "output directory");
  run_cmd->add_option("--seeds", run.seeds, "number of replicas");
  run_cmd->add_option("--T", run.horizon, "horizon");
  run_cmd->add_option("--learner", run.learners, "aligned, aligned-ell or vanilla");
  run_cmd->add_option("--dataset", run.dataset, "replay CSV");
  run_cmd->add_option("--utility", run.utility, "u11,u10,u00,u01");
  for (const auto& key : al::config_keys()) {
    if (key == "T" || key == "out" || key == "seeds" || key == "utility") continue;
    run_cmd->add_option_function<std::string>(
        "--" + key, [&run, key](const std::string& v) { run.dotted[key] = v; },
        "config key " + key);
  }

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "alignment metrics for a replay dataset");
  report_cmd->add_option("--dataset", report.dataset, "replay CSV")->required();
  report_cmd->add_option("--out", report.out, "directory for alignment.json (stdout if empty)");
  report_cmd->add_option("--group", report.group, "restrict to one group");
  report_cmd->add_option("--human-scale", report.human_scale, "auto, unit or percent");
  report_cmd->add_option("--ai-scale", report.ai_scale, "auto, unit or percent");

  CoverageArgs coverage;
  auto* cov_cmd = app.add_subcommand("coverage", "Monte Carlo DKW coverage checks");
  cov_cmd->add_option("--n", coverage.ns, "sample sizes")->delimiter(',');
  cov_cmd->add_option("--eps", coverage.eps, "deviation levels")->delimiter(',');
  cov_cmd->add_option("--trials", coverage.trials);
  cov_cmd->add_option("--seed", coverage.seed);
  cov_cmd->add_option("--law", coverage.law, "uniform or discrete");
  cov_cmd->add_option("--levels", coverage.levels, "atoms of the discrete law");
  cov_cmd->add_flag("--class-d", coverage.class_d, "keyed threshold class");
  cov_cmd->add_option("--keys", coverage.keys, "key counts")->delimiter(',');
  cov_cmd->add_option("--x-levels", coverage.x_levels);

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("bound", "threshold suboptimality bound from MAE");
  bound_cmd->add_option("--mae", bound.mae);
  bound_cmd->add_option("--dataset", bound.dataset, "replay CSV to measure MAE from");
  bound_cmd->add_option("--group", bound.group);
  bound_cmd->add_option("--utility", bound.utility, "u11,u10,u00,u01");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return do_run(run);
    if (*report_cmd) return do_report(report);
    if (*cov_cmd) return do_coverage(coverage);
    if (*bound_cmd) return do_bound(bound);
  } catch (const al::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const al::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
