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
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vmshield/manager.hpp"
#include "vmshield/resource.hpp"
#include "vmshield/security.hpp"

#include <json.hpp>

namespace vmshield {

enum class AttackScenario { none, co_residency, multi_hijack, grouped_cascade };

std::string_view to_string(AttackScenario scenario);
std::optional<AttackScenario> parse_attack_scenario(std::string_view text);

struct ServerGroup {
  std::uint32_t count = 0;
  ResourceVector capacity;
  bool initially_active = false;

  bool operator==(const ServerGroup&) const = default;
};

struct ArrivalProcess {
  double rate = 0.3;  // mean applications per tick (Poisson)
  std::uint32_t fan_out = 4;
  std::uint32_t max_fan_out = 16;
  ResourceVector demand_min;
  ResourceVector demand_max;
  Tick duration_min = 80;
  Tick duration_max = 240;

  bool operator==(const ArrivalProcess&) const = default;
};

/// Per-VM usage fraction of capacity:
/// base + amplitude * sin(2*pi*(t + phase) / period) + N(0, noise_stddev),
/// clamped to [0, 1].
struct UsageSignal {
  double base = 0.5;
  double amplitude = 0.2;
  Tick period = 48;
  double noise_stddev = 0.05;

  bool operator==(const UsageSignal&) const = default;
};

struct PredictorSettings {
  std::uint32_t lags = 12;
  double learning_rate = 0.01;
  std::uint32_t epochs = 200;
  Tick retrain_every = 24;
  Tick retention = 96;

  bool operator==(const PredictorSettings&) const = default;
};

struct EnergyModel {
  double idle_power = 0.6;
  double max_power = 1.0;
  double migration_cost = 0.05;

  bool operator==(const EnergyModel&) const = default;
};

struct AttackSettings {
  AttackScenario scenario = AttackScenario::none;
  std::uint32_t count = 1;         // attacker VMs for multi-hijack
  std::uint32_t chain_length = 3;  // attacker VMs for grouped-cascade
  Tick launch_time = 100;
  std::string flavor;              // empty = smallest catalogue flavor
  /// Attackers register inside a dummy application instead of staying unknown.
  bool masquerade = false;

  bool operator==(const AttackSettings&) const = default;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  Tick duration = 400;
  std::vector<ServerGroup> servers;
  std::vector<VmFlavor> flavors;
  ArrivalProcess arrivals;
  UsageSignal usage;
  double link_probability = 0.3;

  bool audit_enabled = true;
  Tick audit_interval = 1;
  AttackerPolicy policy = AttackerPolicy::both;
  bool relocate_victims = false;

  Tick management_interval = 12;
  double underload_threshold = 0.2;
  double overload_margin = 1.0;
  bool consolidation = true;

  PredictorSettings predictor;
  EnergyModel energy;
  Tick breach_dwell_time = 5;
  AttackSettings attack;
  bool check_invariants = true;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Throws Errc::validation naming the first violated constraint.
void validate(const ScenarioConfig& config);

nlohmann::ordered_json to_json(const ScenarioConfig& config);
/// Strict parse: unknown keys and mistyped values raise Errc::validation with
/// the offending field path. Missing keys keep their defaults. Validates.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
/// Parses text; syntax errors report line and column.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::string& path);

std::vector<std::string> preset_names();
/// Throws Errc::validation for an unknown name.
ScenarioConfig preset(std::string_view name);

}  // namespace vmshield
