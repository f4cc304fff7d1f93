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
#include "vmshield/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

#include "vmshield/error.hpp"

namespace vmshield {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(AttackScenario scenario) {
  switch (scenario) {
    case AttackScenario::none: return "none";
    case AttackScenario::co_residency: return "co-residency";
    case AttackScenario::multi_hijack: return "multi-hijack";
    case AttackScenario::grouped_cascade: return "grouped-cascade";
  }
  return "none";
}

std::optional<AttackScenario> parse_attack_scenario(std::string_view text) {
  for (auto s : {AttackScenario::none, AttackScenario::co_residency, AttackScenario::multi_hijack,
                 AttackScenario::grouped_cascade}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::validation, what); }

void require(bool ok, const std::string& constraint) {
  if (!ok) invalid(constraint);
}

bool finite(double v) { return std::isfinite(v); }

void require_vector(const ResourceVector& v, const std::string& field, bool positive) {
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
    const std::string name = field + "." + std::string(kDimensionNames[d]);
    require(finite(v[d]), name + " must be finite");
    if (positive) {
      require(v[d] > 0.0, name + " > 0");
    } else {
      require(v[d] >= 0.0, name + " ≥ 0");
    }
  }
}

/// Walks one JSON object, remembering which keys were read so that unknown
/// keys can be reported.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) invalid(label() + " must be an object");
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) invalid(field(key) + " must be a number");
      out = v->get<double>();
    }
  }

  template <class Int>
  void integer(const char* key, Int& out) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_number_integer()) {
      if (v->is_number_unsigned()) {
        const auto u = v->get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
          invalid(field(key) + " is out of range");
        }
        out = static_cast<Int>(u);
        return;
      }
      const auto i = v->get<std::int64_t>();
      if constexpr (std::is_unsigned_v<Int>) {
        if (i < 0) invalid(field(key) + " ≥ 0");
        if (static_cast<std::uint64_t>(i) > std::numeric_limits<Int>::max()) {
          invalid(field(key) + " is out of range");
        }
      } else {
        if (i < std::numeric_limits<Int>::min() || i > std::numeric_limits<Int>::max()) {
          invalid(field(key) + " is out of range");
        }
      }
      out = static_cast<Int>(i);
      return;
    }
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (d == std::floor(d) && std::abs(d) < 9.0e15) {
        if constexpr (std::is_unsigned_v<Int>) {
          if (d < 0) invalid(field(key) + " ≥ 0");
        }
        out = static_cast<Int>(d);
        return;
      }
    }
    invalid(field(key) + " must be an integer");
  }

  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) invalid(field(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }

  void string(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) invalid(field(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  void vector(const char* key, ResourceVector& out) {
    if (const json* v = find(key)) {
      Reader r(*v, field(key));
      for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
        r.number(std::string(kDimensionNames[d]).c_str(), out[d]);
      }
      r.finish();
    }
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) invalid("unknown field " + field(key.c_str()));
    }
  }

 private:
  std::string label() const { return path_.empty() ? "scenario" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

ordered_json vector_json(const ResourceVector& v) {
  ordered_json j;
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) j[std::string(kDimensionNames[d])] = v[d];
  return j;
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.duration >= 0, "duration ≥ 0");
  require(!c.servers.empty(), "servers must list at least one group");
  for (std::size_t i = 0; i < c.servers.size(); ++i) {
    const std::string f = "servers[" + std::to_string(i) + "]";
    require_vector(c.servers[i].capacity, f + ".capacity", true);
  }
  require(!c.flavors.empty(), "flavors must list at least one flavor");
  std::set<std::string> names;
  for (std::size_t i = 0; i < c.flavors.size(); ++i) {
    const std::string f = "flavors[" + std::to_string(i) + "]";
    require(!c.flavors[i].name.empty(), f + ".name must be non-empty");
    require(names.insert(c.flavors[i].name).second, f + ".name must be unique");
    require_vector(c.flavors[i].capacity, f + ".capacity", false);
  }
  try {
    FlavorCatalogue catalogue(c.flavors);
  } catch (const Error& e) {
    invalid(std::string("flavors: ") + e.what());
  }

  const auto& a = c.arrivals;
  require(finite(a.rate) && a.rate >= 0.0, "arrivals.rate ≥ 0");
  require(a.max_fan_out >= 1, "arrivals.max_fan_out ≥ 1");
  require(a.fan_out >= 1 && a.fan_out <= a.max_fan_out, "arrivals.fan_out in [1, max_fan_out]");
  require_vector(a.demand_min, "arrivals.demand_min", false);
  require_vector(a.demand_max, "arrivals.demand_max", false);
  require(rv_fits(a.demand_min, a.demand_max), "arrivals.demand_min ≤ arrivals.demand_max");
  require(rv_max_component(a.demand_min) > 0.0, "arrivals.demand_min must be non-zero");
  require(a.duration_min >= 1, "arrivals.duration_min ≥ 1");
  require(a.duration_max >= a.duration_min, "arrivals.duration_max ≥ arrivals.duration_min");

  require(finite(c.usage.base) && c.usage.base >= 0.0 && c.usage.base <= 1.0, "usage.base in [0, 1]");
  require(finite(c.usage.amplitude) && c.usage.amplitude >= 0.0, "usage.amplitude ≥ 0");
  require(c.usage.period >= 1, "usage.period ≥ 1");
  require(finite(c.usage.noise_stddev) && c.usage.noise_stddev >= 0.0, "usage.noise_stddev ≥ 0");
  require(finite(c.link_probability) && c.link_probability >= 0.0 && c.link_probability <= 1.0,
          "link_probability in [0, 1]");

  require(c.audit_interval >= 1, "audit_interval ≥ 1");
  require(c.management_interval >= 1, "management_interval ≥ 1");
  require(finite(c.underload_threshold) && c.underload_threshold >= 0.0 &&
              c.underload_threshold <= 1.0,
          "underload_threshold in [0, 1]");
  require(finite(c.overload_margin) && c.overload_margin > 0.0, "overload_margin > 0");
  require(c.breach_dwell_time >= 1, "breach_dwell_time ≥ 1");

  const auto& p = c.predictor;
  require(p.lags >= 1, "predictor.lags ≥ 1");
  require(finite(p.learning_rate) && p.learning_rate > 0.0, "predictor.learning_rate > 0");
  require(p.retrain_every >= 1, "predictor.retrain_every ≥ 1");
  require(p.retention >= static_cast<Tick>(p.lags) + 2, "predictor.retention ≥ predictor.lags + 2");

  const auto& e = c.energy;
  require(finite(e.idle_power) && e.idle_power >= 0.0, "energy.idle_power ≥ 0");
  require(finite(e.max_power) && e.max_power >= e.idle_power, "energy.max_power ≥ energy.idle_power");
  require(finite(e.migration_cost) && e.migration_cost >= 0.0, "energy.migration_cost ≥ 0");

  const auto& k = c.attack;
  require(k.count >= 1, "attack.count ≥ 1");
  require(k.chain_length >= 2, "attack.chain_length ≥ 2");
  require(k.launch_time >= 0, "attack.launch_time ≥ 0");
  if (!k.flavor.empty()) require(names.contains(k.flavor), "attack.flavor must name a flavor");
}

ordered_json to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["duration"] = c.duration;
  j["servers"] = ordered_json::array();
  for (const auto& g : c.servers) {
    j["servers"].push_back({{"count", g.count},
                            {"capacity", vector_json(g.capacity)},
                            {"initially_active", g.initially_active}});
  }
  j["flavors"] = ordered_json::array();
  for (const auto& f : c.flavors) {
    j["flavors"].push_back({{"name", f.name}, {"capacity", vector_json(f.capacity)}});
  }
  const auto& a = c.arrivals;
  j["arrivals"] = {{"rate", a.rate},
                   {"fan_out", a.fan_out},
                   {"max_fan_out", a.max_fan_out},
                   {"demand_min", vector_json(a.demand_min)},
                   {"demand_max", vector_json(a.demand_max)},
                   {"duration_min", a.duration_min},
                   {"duration_max", a.duration_max}};
  j["usage"] = {{"base", c.usage.base},
                {"amplitude", c.usage.amplitude},
                {"period", c.usage.period},
                {"noise_stddev", c.usage.noise_stddev}};
  j["link_probability"] = c.link_probability;
  j["audit_enabled"] = c.audit_enabled;
  j["audit_interval"] = c.audit_interval;
  j["policy"] = std::string(to_string(c.policy));
  j["relocate_victims"] = c.relocate_victims;
  j["management_interval"] = c.management_interval;
  j["underload_threshold"] = c.underload_threshold;
  j["overload_margin"] = c.overload_margin;
  j["consolidation"] = c.consolidation;
  j["predictor"] = {{"lags", c.predictor.lags},
                    {"learning_rate", c.predictor.learning_rate},
                    {"epochs", c.predictor.epochs},
                    {"retrain_every", c.predictor.retrain_every},
                    {"retention", c.predictor.retention}};
  j["energy"] = {{"idle_power", c.energy.idle_power},
                 {"max_power", c.energy.max_power},
                 {"migration_cost", c.energy.migration_cost}};
  j["breach_dwell_time"] = c.breach_dwell_time;
  j["attack"] = {{"scenario", std::string(to_string(c.attack.scenario))},
                 {"count", c.attack.count},
                 {"chain_length", c.attack.chain_length},
                 {"launch_time", c.attack.launch_time},
                 {"flavor", c.attack.flavor},
                 {"masquerade", c.attack.masquerade}};
  j["check_invariants"] = c.check_invariants;
  return j;
}

ScenarioConfig scenario_from_json(const json& doc) {
  ScenarioConfig c;
  Reader r(doc, "");
  r.integer("seed", c.seed);
  r.integer("duration", c.duration);
  if (const json* servers = r.find("servers")) {
    if (!servers->is_array()) invalid("servers must be an array");
    c.servers.clear();
    for (std::size_t i = 0; i < servers->size(); ++i) {
      ServerGroup g;
      Reader gr((*servers)[i], "servers[" + std::to_string(i) + "]");
      gr.integer("count", g.count);
      gr.vector("capacity", g.capacity);
      gr.boolean("initially_active", g.initially_active);
      gr.finish();
      c.servers.push_back(g);
    }
  }
  if (const json* flavors = r.find("flavors")) {
    if (!flavors->is_array()) invalid("flavors must be an array");
    c.flavors.clear();
    for (std::size_t i = 0; i < flavors->size(); ++i) {
      VmFlavor f;
      Reader fr((*flavors)[i], "flavors[" + std::to_string(i) + "]");
      fr.string("name", f.name);
      fr.vector("capacity", f.capacity);
      fr.finish();
      c.flavors.push_back(f);
    }
  }
  if (const json* arrivals = r.find("arrivals")) {
    Reader ar(*arrivals, "arrivals");
    ar.number("rate", c.arrivals.rate);
    ar.integer("fan_out", c.arrivals.fan_out);
    ar.integer("max_fan_out", c.arrivals.max_fan_out);
    ar.vector("demand_min", c.arrivals.demand_min);
    ar.vector("demand_max", c.arrivals.demand_max);
    ar.integer("duration_min", c.arrivals.duration_min);
    ar.integer("duration_max", c.arrivals.duration_max);
    ar.finish();
  }
  if (const json* usage = r.find("usage")) {
    Reader ur(*usage, "usage");
    ur.number("base", c.usage.base);
    ur.number("amplitude", c.usage.amplitude);
    ur.integer("period", c.usage.period);
    ur.number("noise_stddev", c.usage.noise_stddev);
    ur.finish();
  }
  r.number("link_probability", c.link_probability);
  r.boolean("audit_enabled", c.audit_enabled);
  r.integer("audit_interval", c.audit_interval);
  std::string policy(to_string(c.policy));
  r.string("policy", policy);
  if (auto p = parse_attacker_policy(policy)) {
    c.policy = *p;
  } else {
    invalid("policy must be one of both, unregistered_only");
  }
  r.boolean("relocate_victims", c.relocate_victims);
  r.integer("management_interval", c.management_interval);
  r.number("underload_threshold", c.underload_threshold);
  r.number("overload_margin", c.overload_margin);
  r.boolean("consolidation", c.consolidation);
  if (const json* predictor = r.find("predictor")) {
    Reader pr(*predictor, "predictor");
    pr.integer("lags", c.predictor.lags);
    pr.number("learning_rate", c.predictor.learning_rate);
    pr.integer("epochs", c.predictor.epochs);
    pr.integer("retrain_every", c.predictor.retrain_every);
    pr.integer("retention", c.predictor.retention);
    pr.finish();
  }
  if (const json* energy = r.find("energy")) {
    Reader er(*energy, "energy");
    er.number("idle_power", c.energy.idle_power);
    er.number("max_power", c.energy.max_power);
    er.number("migration_cost", c.energy.migration_cost);
    er.finish();
  }
  r.integer("breach_dwell_time", c.breach_dwell_time);
  if (const json* attack = r.find("attack")) {
    Reader kr(*attack, "attack");
    std::string scenario(to_string(c.attack.scenario));
    kr.string("scenario", scenario);
    if (auto s = parse_attack_scenario(scenario)) {
      c.attack.scenario = *s;
    } else {
      invalid("attack.scenario must be one of none, co-residency, multi-hijack, grouped-cascade");
    }
    kr.integer("count", c.attack.count);
    kr.integer("chain_length", c.attack.chain_length);
    kr.integer("launch_time", c.attack.launch_time);
    kr.string("flavor", c.attack.flavor);
    kr.boolean("masquerade", c.attack.masquerade);
    kr.finish();
  }
  r.boolean("check_invariants", c.check_invariants);
  r.finish();
  validate(c);
  return c;
}

ScenarioConfig parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; translate it into line:column.
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << "malformed scenario JSON at line " << line << ", column " << col;
    throw Error(Errc::validation, msg.str());
  }
  return scenario_from_json(doc);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

// --------------------------------------------------------------- presets

namespace {

ScenarioConfig base_preset() {
  ScenarioConfig c;
  c.seed = 1;
  c.duration = 300;
  c.servers = {ServerGroup{40, {32, 131072, 2000, 10000}, false}};
  c.flavors = {VmFlavor{"small", {2, 4096, 50, 500}},
               VmFlavor{"medium", {4, 8192, 100, 1000}},
               VmFlavor{"large", {8, 16384, 200, 2000}}};
  c.arrivals.rate = 0.25;
  c.arrivals.fan_out = 4;
  c.arrivals.max_fan_out = 16;
  c.arrivals.demand_min = {2, 4096, 40, 400};
  c.arrivals.demand_max = {24, 49152, 600, 6000};
  c.arrivals.duration_min = 60;
  c.arrivals.duration_max = 180;
  c.predictor.retention = 96;
  c.attack.launch_time = 100;
  c.attack.flavor = "small";
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"benign-baseline", "co-residency", "multi-hijack", "grouped-cascade",
          "consolidation-demo"};
}

ScenarioConfig preset(std::string_view name) {
  ScenarioConfig c = base_preset();
  if (name == "benign-baseline") {
    c.attack.scenario = AttackScenario::none;
  } else if (name == "co-residency") {
    c.attack.scenario = AttackScenario::co_residency;
  } else if (name == "multi-hijack") {
    c.attack.scenario = AttackScenario::multi_hijack;
    c.attack.count = 3;
  } else if (name == "grouped-cascade") {
    c.attack.scenario = AttackScenario::grouped_cascade;
    c.attack.chain_length = 3;
  } else if (name == "consolidation-demo") {
    c.duration = 400;
    c.servers = {ServerGroup{30, {32, 131072, 2000, 10000}, true}};
    c.arrivals.rate = 0.1;
    c.arrivals.duration_min = 40;
    c.arrivals.duration_max = 120;
    c.overload_margin = 0.85;
    c.attack.scenario = AttackScenario::none;
  } else {
    throw Error(Errc::validation, "unknown preset '" + std::string(name) + "'");
  }
  return c;
}

}  // namespace vmshield
