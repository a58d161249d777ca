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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "alignlearn/experiment.hpp"
#include "oracles.hpp"

namespace al = alignlearn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("alignlearn_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ALIGNLEARN_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

al::ExperimentConfig small_config(const fs::path& out) {
  al::ExperimentConfig c;
  c.horizon = 200;
  c.seeds = 3;
  c.out = out;
  return c;
}

TEST(Config, DefaultsRoundTripThroughJson) {
  const al::ExperimentConfig c;
  const auto back = al::config_from_json(al::to_json(c));
  EXPECT_EQ(al::to_json(back), al::to_json(c));
}

TEST(Config, PartialDocumentAndOverrides) {
  al::Json doc = al::Json::parse(R"({"T": 50, "aligned": {"kappa": 2.5}})");
  al::apply_override(doc, "hard.epsilon", "0.2");
  al::apply_override(doc, "learners", "aligned,vanilla");
  al::apply_override(doc, "utility", "3,0,2,1");
  al::apply_override(doc, "aligned.link", "piecewise-linear");
  const auto c = al::config_from_json(doc);
  EXPECT_EQ(c.horizon, 50);
  EXPECT_EQ(c.aligned.kappa, 2.5);
  EXPECT_EQ(c.aligned.link, al::LinkKind::kPiecewiseLinear);
  EXPECT_EQ(c.hard_epsilon, 0.2);
  EXPECT_EQ(c.learners, (std::vector<std::string>{"aligned", "vanilla"}));
  EXPECT_EQ(c.utility, (al::UtilityTable{3, 0, 2, 1}));
  auto keys = al::config_keys();
  EXPECT_NE(std::find(keys.begin(), keys.end(), "aligned.kappa"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "replay.dataset"), keys.end());
}

TEST(Config, Validation) {
  EXPECT_THROW(al::config_from_json(al::Json::parse(R"({"bogus": 1})")), al::ConfigError);
  EXPECT_THROW(al::config_from_json(al::Json::parse(R"({"aligned": {"x": 1}})")), al::ConfigError);
  EXPECT_THROW(al::config_from_json(al::Json::parse(R"({"T": "ten"})")), al::ConfigError);
  EXPECT_THROW(al::config_from_json(al::Json::parse(R"({"mode": "other"})")), al::ConfigError);
  EXPECT_THROW(al::config_from_json(al::Json::parse(R"({"utility": [1, 0, 1]})")), al::ConfigError);
  EXPECT_THROW(al::config_from_json(al::Json::parse(R"({"hard": {"epsilon": "big"}})")), al::ConfigError);
  auto c = small_config(scratch("validate"));
  c.horizon = 0;
  EXPECT_THROW(c.validate(), al::ConfigError);
  c = small_config(scratch("validate"));
  c.seeds = 0;
  EXPECT_THROW(c.validate(), al::ConfigError);
  c = small_config(scratch("validate"));
  c.mode = al::Mode::kReplay;
  EXPECT_THROW(c.validate(), al::ConfigError);
  c = small_config(scratch("validate"));
  c.learners = {"ucb"};
  EXPECT_THROW(c.validate(), al::ConfigError);
}

TEST(Run, SingleStepSingleSeed) {
  auto out = scratch("t1");
  auto c = small_config(out);
  c.horizon = 1;
  c.seeds = 1;
  al::run_experiment(c);
  for (const auto& l : c.learners) {
    std::ifstream in(out / l / "seed-0.csv");
    const auto trace = al::read_trace_csv(in);
    EXPECT_EQ(trace.steps.size(), 1u);
    std::ifstream cin(out / l / "curve.csv");
    const auto curve = al::read_curve_csv(cin);
    EXPECT_EQ(curve.mean.size(), 1u);
    EXPECT_EQ(curve.n_seeds, 1);
    EXPECT_EQ(curve.ci_halfwidth[0], 0.0);
  }
  EXPECT_TRUE(fs::exists(out / "alignment.json"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Run, LayoutAndSeedNames) {
  auto out = scratch("layout");
  auto c = small_config(out);
  c.base_seed = 10;
  c.learners = {"aligned", "aligned-ell", "vanilla"};
  al::run_experiment(c);
  for (const auto& l : c.learners)
    for (int s : {10, 11, 12}) EXPECT_TRUE(fs::exists(out / l / ("seed-" + std::to_string(s) + ".csv")));
  EXPECT_FALSE(fs::exists(out / "aligned" / "seed-13.csv"));
  const auto m = al::Json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["seed_list"], al::Json::parse("[10, 11, 12]"));
  EXPECT_EQ(m["version"], ALIGNLEARN_VERSION);
  EXPECT_TRUE(m.contains("wall_time_seconds"));
  EXPECT_TRUE(m.contains("started_at"));
}

TEST(Run, CsvRoundTripsThroughReaders) {
  auto out = scratch("roundtrip");
  auto c = small_config(out);
  const auto result = al::run_experiment(c);
  for (std::size_t k = 0; k < c.learners.size(); ++k) {
    const auto text = slurp(out / c.learners[k] / "curve.csv");
    std::istringstream in(text);
    const auto curve = al::read_curve_csv(in);
    EXPECT_EQ(curve.mean, result.curves[k].mean);
    EXPECT_EQ(curve.ci_halfwidth, result.curves[k].ci_halfwidth);
    std::ostringstream again;
    al::write_curve_csv(again, curve);
    EXPECT_EQ(again.str(), text);
    const auto ttext = slurp(out / c.learners[k] / "seed-1.csv");
    std::istringstream tin(ttext);
    const auto trace = al::read_trace_csv(tin);
    std::ostringstream tagain;
    al::write_trace_csv(tagain, trace);
    EXPECT_EQ(tagain.str(), ttext);
  }
  std::istringstream bad("t,h,b\n1,2,3\n");
  EXPECT_THROW(al::read_trace_csv(bad), al::DataError);
}

TEST(Run, ByteIdenticalAcrossRunsAndThreads) {
  auto a = scratch("det_a"), b = scratch("det_b");
  auto ca = small_config(a), cb = small_config(b);
  cb.threads = 3;
  cb.out = b;
  al::run_experiment(ca);
  al::run_experiment(cb);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    const auto rel = fs::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
  }
}

TEST(Run, ManifestReproducesCurves) {
  auto a = scratch("manifest_a"), b = scratch("manifest_b");
  auto c = small_config(a);
  c.mode = al::Mode::kSyntheticHard;
  c.hard.ai_levels = 5;
  al::run_experiment(c);
  auto doc = al::read_config_document(a / "manifest.json");
  doc["out"] = b.string();
  al::run_experiment(al::config_from_json(doc));
  for (const auto& l : c.learners)
    EXPECT_EQ(slurp(a / l / "curve.csv"), slurp(b / l / "curve.csv"));
}

TEST(Run, GroupAShapedAlignedBeatsVanilla) {
  auto out = scratch("groupa");
  al::ExperimentConfig c;
  c.horizon = 2040;
  c.seeds = 100;
  c.out = out;
  c.write_traces = false;
  const auto r = al::run_experiment(c);
  ASSERT_EQ(r.curves.size(), 2u);
  EXPECT_LT(r.curves[0].mean.back(), r.curves[1].mean.back());
  EXPECT_EQ(r.curves[0].n_seeds, 100);
}

TEST(Run, ReplayUsesPluginInstance) {
  auto out = scratch("replay");
  al::ExperimentConfig c;
  c.mode = al::Mode::kReplay;
  c.dataset = fs::path(ALIGNLEARN_DATA_DIR) / "two_by_two.csv";
  c.horizon = 0;
  c.seeds = 4;
  c.out = out;
  const auto r = al::run_experiment(c);
  EXPECT_EQ(r.curves[0].mean.size(), 40u);
  EXPECT_EQ(r.manifest["T_effective"], 40);
  EXPECT_EQ(r.alignment["source"], "empirical");
  c.horizon = 41;
  EXPECT_THROW(al::run_experiment(c), al::ConfigError);
  c.horizon = 0;
  c.group = "nobody";
  EXPECT_THROW(al::run_experiment(c), al::DataError);
}

TEST(Run, UnwritableOutput) {
  auto c = small_config("/proc/alignlearn_cannot_write_here");
  EXPECT_THROW(al::run_experiment(c), al::ConfigError);
}

TEST(Cli, ExitCodes) {
  auto out = scratch("cli");
  EXPECT_EQ(cli("run --T 5 --seeds 2 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "vanilla" / "curve.csv"));
  EXPECT_EQ(cli("run --T 5 --seeds 2 --learner aligned-ell --aligned.kappa 2 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "aligned-ell" / "seed-1.csv"));
  EXPECT_EQ(cli("run --T 0 --out " + out.string()), 2);
  EXPECT_EQ(cli("run --utility 0,1,1,0 --out " + out.string()), 2);
  EXPECT_EQ(cli("run --no-such-flag"), 2);
  EXPECT_EQ(cli("run --config /nonexistent.json"), 2);
  EXPECT_EQ(cli("report --dataset /nonexistent.csv"), 3);
  const auto bad = out / "bad.csv";
  std::ofstream(bad) << "h,b,y\n0.1,0.2,7\n";
  EXPECT_EQ(cli("report --dataset " + bad.string()), 3);
  EXPECT_EQ(cli("bound --mae 0.2"), 0);
  EXPECT_EQ(cli("coverage --n 20 --eps 0.3 --trials 50"), 0);
  EXPECT_EQ(cli("coverage --class-d --n 100 --keys 1,2 --trials 21"), 0);
}

TEST(Cli, ReportTwoByTwoMatchesHandOracle) {
  auto out = scratch("report2x2");
  ASSERT_EQ(cli("report --dataset " + std::string(ALIGNLEARN_DATA_DIR) + "/two_by_two.csv --out " +
                out.string()),
            0);
  const auto j = al::Json::parse(slurp(out / "alignment.json"));
  const auto o = oracle::pairwise_metrics(2, 2, {6 / 10.0, 4 / 10.0, 5 / 10.0, 7 / 10.0});
  EXPECT_EQ(j["mae"].get<double>(), o.mae);
  EXPECT_EQ(j["eae"].get<double>(), o.eae);
  EXPECT_EQ(j["violations"].size(), 1u);
  EXPECT_EQ(j["cells"].size(), 4u);
  EXPECT_EQ(j["cells"][0]["count"], 10);
}

TEST(Cli, ReportOnAlignedDumpIsZero) {
  auto out = scratch("report_aligned");
  fs::create_directories(out);
  auto inst = al::sample_aligned({});
  al::ReplayLog log;
  // Deterministic labels from the sign of the link keep empirical rates
  // monotone: y = 1 exactly when P(Y=1) > 1/2.
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 13; ++j)
      for (int k = 0; k < 3; ++k)
        log.observations.push_back({inst.grid().human_levels()[i], inst.grid().ai_levels()[j],
                                    inst.cond(i, j) > 0.5 ? 1 : 0});
  al::write_replay(out / "dump.csv", log);
  ASSERT_EQ(cli("report --dataset " + (out / "dump.csv").string() + " --out " + out.string()), 0);
  const auto j = al::Json::parse(slurp(out / "alignment.json"));
  EXPECT_EQ(j["mae"].get<double>(), 0.0);
  EXPECT_EQ(j["eae"].get<double>(), 0.0);
}

}  // namespace
