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
#include "vmshield/output.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <system_error>

#include "vmshield/error.hpp"

namespace vmshield {

using nlohmann::ordered_json;

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error(Errc::arithmetic, "unformattable number");
  return std::string(buf.data(), end);
}

ordered_json metrics_json(const RunResult& result) {
  const Metrics& m = result.metrics;
  ordered_json j;
  j["seed"] = result.seed;
  j["energy"] = m.energy;
  j["migrations"] = m.migrations;
  j["terminations"] = m.terminations;
  j["breaches_prevented"] = m.breaches_prevented;
  j["breaches_succeeded"] = m.breaches_succeeded;
  j["false_positive_terminations"] = m.false_positive_terminations;
  j["sla_violations"] = m.sla_violations;
  j["active_server_ticks"] = m.active_server_ticks;
  j["attacks_established"] = m.attacks_established;
  j["breaches_pending"] = m.breaches_pending;
  j["applications_admitted"] = m.applications_admitted;
  j["applications_completed"] = m.applications_completed;
  j["applications_failed"] = m.applications_failed;
  j["admissions_rejected"] = m.admissions_rejected;
  j["overload_unresolved"] = m.overload_unresolved;
  j["vms_created"] = m.vms_created;
  j["injection_warnings"] = m.injection_warnings;
  j["invariants"] = {{"capacity_violations", m.capacity_violations},
                     {"zombie_vms", m.zombie_vms},
                     {"placement_violations", m.placement_violations},
                     {"conservation_violations", m.conservation_violations}};
  return j;
}

std::string ticks_csv(const RunResult& result) {
  std::string out =
      "tick,energy,active_servers,migrations,terminations,breaches_prevented,breaches_succeeded\n";
  for (const TickRow& r : result.ticks) {
    out += std::to_string(r.tick);
    out += ',';
    out += format_number(r.energy);
    for (std::uint64_t v : {r.active_servers, r.migrations, r.terminations, r.breaches_prevented,
                            r.breaches_succeeded}) {
      out += ',';
      out += std::to_string(v);
    }
    out += '\n';
  }
  return out;
}

std::string actions_jsonl(const RunResult& result) {
  std::string out;
  for (const Action& a : result.actions) {
    ordered_json j;
    j["t"] = a.t;
    j["action"] = std::string(to_string(a.kind));
    j["subject"] = a.subject;
    j["from"] = a.from ? ordered_json(a.from->value) : ordered_json(nullptr);
    j["to"] = a.to ? ordered_json(a.to->value) : ordered_json(nullptr);
    j["reason"] = std::string(to_string(a.reason));
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string audit_jsonl(const RunResult& result) {
  std::string out;
  for (const AuditRecord& r : result.audits) {
    ordered_json links = ordered_json::array();
    for (const Link& l : r.unauthorized) links.push_back({l.first().value, l.second().value});
    ordered_json terminated = ordered_json::array();
    for (VmId vm : r.terminated) terminated.push_back(vm.value);
    ordered_json j;
    j["t"] = r.t;
    j["unauthorized"] = std::move(links);
    j["terminated"] = std::move(terminated);
    j["policy"] = std::string(to_string(r.policy));
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.close();
  if (!f) throw Error(Errc::io, "failed writing " + path.string());
}

void write_run_outputs(const std::filesystem::path& dir, const RunResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "metrics.json", metrics_json(result).dump(2) + "\n");
  write_text(dir / "ticks.csv", ticks_csv(result));
  write_text(dir / "actions.jsonl", actions_jsonl(result));
  write_text(dir / "audit.jsonl", audit_jsonl(result));
}

}  // namespace vmshield
