/*
 * Copyright 2026 The vmshield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "vmshield/cli.hpp"
#include "vmshield/error.hpp"

namespace vmshield {
namespace {

namespace fs = std::filesystem;
using fixtures::scratch_dir;
using fixtures::slurp;

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "vmshield");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string scenario_file(const std::string& name) {
  return std::string(VMSHIELD_SCENARIO_DIR) + "/" + name + ".json";
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

TEST(Cli, RunWritesEveryArtifact) {
  const fs::path dir = scratch_dir("cli-run");
  const Invocation r =
      invoke({"run", "--preset", "co-residency", "--seed", "7", "--duration", "150", "-o",
              dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"metrics.json", "ticks.csv", "actions.jsonl", "audit.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
  EXPECT_EQ(metrics.at("seed"), 7);
  for (const char* key : {"energy", "migrations", "terminations", "breaches_prevented",
                          "breaches_succeeded", "false_positive_terminations", "sla_violations",
                          "active_server_ticks"}) {
    EXPECT_TRUE(metrics.contains(key)) << key;
  }
  const std::string ticks = slurp(dir / "ticks.csv");
  EXPECT_EQ(ticks.substr(0, ticks.find('\n')),
            "tick,energy,active_servers,migrations,terminations,breaches_prevented,"
            "breaches_succeeded");
  EXPECT_EQ(line_count(ticks), 151u);
  EXPECT_NE(r.out.find("seed=7"), std::string::npos);
}

TEST(Cli, QuietSuppressesTheSummary) {
  const fs::path dir = scratch_dir("cli-quiet");
  const Invocation r = invoke({"run", "--preset", "benign-baseline", "--duration", "10", "-q",
                               "-o", dir.string()});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, PresetMatchesTheShippedScenarioFile) {
  for (const std::string& name : preset_names()) {
    const fs::path a = scratch_dir("cli-preset-a");
    const fs::path b = scratch_dir("cli-preset-b");
    ASSERT_EQ(invoke({"run", "--preset", name, "--duration", "60", "-q", "-o", a.string()}).code,
              kExitOk);
    ASSERT_EQ(invoke({"run", "--scenario", scenario_file(name), "--duration", "60", "-q", "-o",
                      b.string()})
                  .code,
              kExitOk);
    for (const char* f : {"metrics.json", "ticks.csv", "actions.jsonl", "audit.jsonl"}) {
      EXPECT_EQ(slurp(a / f), slurp(b / f)) << name << " " << f;
    }
  }
}

TEST(Cli, PresetSubcommandPrintsTheScenario) {
  const Invocation r = invoke({"preset", "multi-hijack"});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, slurp(scenario_file("multi-hijack")));
}

TEST(Cli, MalformedJsonIsInvalidInput) {
  const fs::path dir = scratch_dir("cli-malformed");
  const fs::path bad = write_file(dir, "bad.json", "{\"seed\": 1,,}");
  const Invocation r = invoke({"run", "--scenario", bad.string(), "-o", (dir / "o").string()});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_FALSE(r.err.empty());
  EXPECT_FALSE(fs::exists(dir / "o" / "metrics.json"));
}

TEST(Cli, ScenarioAndPresetAreExclusive) {
  const Invocation r = invoke({"validate", "--preset", "co-residency", "--scenario",
                               scenario_file("co-residency")});
  EXPECT_EQ(r.code, kExitInvalid);
}

TEST(Cli, UnknownPresetAndAttackAreRejected) {
  EXPECT_EQ(invoke({"validate", "--preset", "nope"}).code, kExitInvalid);
  EXPECT_EQ(invoke({"validate", "--preset", "co-residency", "--attack", "stealth"}).code,
            kExitInvalid);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitInvalid);
  EXPECT_EQ(invoke({}).code, kExitInvalid);
}

TEST(Cli, HelpExitsCleanly) { EXPECT_EQ(invoke({"--help"}).code, kExitOk); }

TEST(Cli, ValidateAcceptsEveryPreset) {
  for (const std::string& name : preset_names()) {
    const Invocation r = invoke({"validate", "--scenario", scenario_file(name)});
    EXPECT_EQ(r.code, kExitOk) << name << r.err;
    EXPECT_EQ(r.out, "valid\n");
  }
}

TEST(Cli, ValidateRejectsZeroDwell) {
  const Invocation r = invoke({"validate", "--preset", "co-residency", "--dwell", "0"});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_NE(r.err.find("breach_dwell_time"), std::string::npos) << r.err;
}

TEST(Cli, ValidateRejectsNegativeCapacity) {
  auto doc = nlohmann::json::parse(slurp(scenario_file("benign-baseline")));
  doc["servers"][0]["capacity"]["memory"] = -4;
  const fs::path dir = scratch_dir("cli-negative");
  const fs::path p = write_file(dir, "neg.json", doc.dump());
  const Invocation r = invoke({"validate", "--scenario", p.string()});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, MissingScenarioFileIsAnIoError) {
  EXPECT_EQ(invoke({"validate", "--scenario", "/nonexistent/x.json"}).code, kExitIo);
}

TEST(Cli, UnwritableOutputIsAnIoError) {
  const fs::path dir = scratch_dir("cli-unwritable");
  const fs::path blocker = write_file(dir, "file", "x");
  const Invocation r = invoke({"run", "--preset", "benign-baseline", "--duration", "5", "-q",
                               "-o", (blocker / "sub").string()});
  EXPECT_EQ(r.code, kExitIo) << r.err;
}

TEST(Cli, OutputDirectoryDefaultsToTheEnvironment) {
  const fs::path dir = scratch_dir("cli-env");
  ::setenv("VMSHIELD_OUT", dir.c_str(), 1);
  const Invocation r = invoke({"run", "--preset", "benign-baseline", "--duration", "5", "-q"});
  ::unsetenv("VMSHIELD_OUT");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "metrics.json"));
  EXPECT_EQ(invoke({"run", "--preset", "benign-baseline", "--duration", "5"}).code,
            kExitInvalid);
}

TEST(Sweep, GridProducesOneRowPerPointInRowMajorOrder) {
  const fs::path dir = scratch_dir("cli-sweep");
  const Invocation r = invoke({"sweep", "--preset", "co-residency", "--duration", "120", "-q",
                               "--grid", "audit_interval=1,4,8", "--grid",
                               "breach_dwell_time=2,5", "-o", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream csv(slurp(dir / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("point,audit_interval,breach_dwell_time,status,energy", 0), 0u);
  std::vector<std::string> rows;
  while (std::getline(csv, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].rfind("point_0000,1,2,ok,", 0), 0u);
  EXPECT_EQ(rows[1].rfind("point_0001,1,5,ok,", 0), 0u);
  EXPECT_EQ(rows[5].rfind("point_0005,8,5,ok,", 0), 0u);
  for (int p = 0; p < 6; ++p) {
    char name[16];
    std::snprintf(name, sizeof name, "point_%04d", p);
    EXPECT_TRUE(fs::exists(dir / name / "metrics.json")) << name;
  }
}

TEST(Sweep, FailingPointIsRecordedAndTheSweepContinues) {
  const fs::path dir = scratch_dir("cli-sweep-fail");
  const Invocation r = invoke({"sweep", "--preset", "co-residency", "--duration", "30", "-q",
                               "--grid", "breach_dwell_time=0,3", "-o", dir.string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.err.find("point_0000"), std::string::npos);
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_NE(csv.find("point_0000,0,failed,,,,,,,,,\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("point_0001,3,ok,"), std::string::npos);
}

TEST(Sweep, EmptyOrMalformedGridIsInvalid) {
  const fs::path dir = scratch_dir("cli-sweep-empty");
  EXPECT_EQ(invoke({"sweep", "--preset", "co-residency", "-o", dir.string()}).code, kExitInvalid);
  EXPECT_EQ(invoke({"sweep", "--preset", "co-residency", "--grid", "audit_interval", "-o",
                    dir.string()})
                .code,
            kExitInvalid);
  EXPECT_EQ(invoke({"sweep", "--preset", "co-residency", "--grid", "bogus=1", "-o",
                    dir.string()})
                .code,
            kExitInvalid);
}

TEST(SetParameter, ParsesNumbersAndRejectsJunk) {
  ScenarioConfig c = preset("co-residency");
  set_parameter(c, "audit_interval", "4");
  set_parameter(c, "underload_threshold", "0.25");
  EXPECT_EQ(c.audit_interval, 4);
  EXPECT_DOUBLE_EQ(c.underload_threshold, 0.25);
  EXPECT_THROW(set_parameter(c, "audit_interval", "4x"), Error);
  EXPECT_THROW(set_parameter(c, "audit_interval", "1.5"), Error);
  EXPECT_THROW(set_parameter(c, "nope", "1"), Error);
  EXPECT_FALSE(sweepable_parameters().empty());
}

}  // namespace
}  // namespace vmshield
