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
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vmshield/manager.hpp"
#include "vmshield/model.hpp"
#include "vmshield/scenario.hpp"
#include "vmshield/security.hpp"
#include "vmshield/workload.hpp"

namespace vmshield {

struct Metrics {
  double energy = 0.0;
  std::uint64_t migrations = 0;
  std::uint64_t terminations = 0;
  std::uint64_t breaches_prevented = 0;
  std::uint64_t breaches_succeeded = 0;
  std::uint64_t false_positive_terminations = 0;
  std::uint64_t sla_violations = 0;
  std::uint64_t active_server_ticks = 0;

  std::uint64_t attacks_established = 0;
  std::uint64_t breaches_pending = 0;
  std::uint64_t applications_admitted = 0;
  std::uint64_t applications_completed = 0;
  std::uint64_t applications_failed = 0;
  std::uint64_t admissions_rejected = 0;
  std::uint64_t overload_unresolved = 0;
  std::uint64_t vms_created = 0;
  std::uint64_t injection_warnings = 0;

  std::uint64_t capacity_violations = 0;
  std::uint64_t zombie_vms = 0;
  std::uint64_t placement_violations = 0;
  std::uint64_t conservation_violations = 0;

  bool operator==(const Metrics&) const = default;
};

enum class BreachOutcome { pending, prevented, succeeded };

std::string_view to_string(BreachOutcome outcome);

struct BreachAttempt {
  std::vector<VmId> attacker_vm_ids;
  VmId target_vm_id;
  std::vector<Link> links;
  Tick link_established_at = 0;
  Tick completes_at = 0;
  BreachOutcome outcome = BreachOutcome::pending;
  std::optional<Tick> resolved_at;
};

/// Prevented iff every attacker was terminated strictly before completes_at;
/// succeeded once `now` reaches completes_at otherwise.
BreachOutcome resolve_attempt(BreachAttempt& attempt, const DatacenterState& state, Tick now);

/// Everything an attack injector may touch.
struct AttackContext {
  DatacenterState& state;
  Cval& cval;
  Avad& avad;
  std::mt19937_64& rng;
  const FlavorCatalogue& catalogue;
  VmFlavor attacker_flavor;
  Tick now = 0;
  Tick dwell = 1;
  /// When set, attackers register under this application in the AVAD.
  std::optional<AppId> masquerade_app;
};

struct AttackInjection {
  std::vector<VmId> attackers;
  std::vector<BreachAttempt> attempts;
  std::vector<Action> actions;
  std::size_t warnings = 0;
};

/// One attacker forced onto the server of a victim VM of a randomly chosen
/// application, linked to the victim. Throws Errc::injection_infeasible.
AttackInjection inject_co_residency(AttackContext& ctx);
/// `count` attackers co-located with distinct victims; a partial injection
/// increments `warnings`. Throws Errc::injection_infeasible if none fit.
AttackInjection inject_multi_hijack(AttackContext& ctx, std::uint32_t count);
/// Chain attacker_1 - ... - attacker_L - target with attacker_L co-located
/// with the target. Throws Errc::injection_infeasible.
AttackInjection inject_grouped_cascade(AttackContext& ctx, std::uint32_t chain_length);

/// Linear power model: idle + (max - idle) * mean-component utilization per
/// active server; off servers draw nothing.
double account_energy(const DatacenterState& state, const EnergyModel& model);

struct TickRow {
  Tick tick = 0;
  double energy = 0.0;
  std::uint64_t active_servers = 0;
  std::uint64_t migrations = 0;
  std::uint64_t terminations = 0;
  std::uint64_t breaches_prevented = 0;
  std::uint64_t breaches_succeeded = 0;

  bool operator==(const TickRow&) const = default;
};

struct AuditRecord {
  Tick t = 0;
  std::vector<Link> unauthorized;
  std::vector<VmId> terminated;
  AttackerPolicy policy = AttackerPolicy::both;

  bool operator==(const AuditRecord&) const = default;
};

struct RunResult {
  std::uint64_t seed = 0;
  Metrics metrics;
  std::vector<TickRow> ticks;
  std::vector<Action> actions;
  std::vector<AuditRecord> audits;
  std::vector<BreachAttempt> attempts;
};

/// Deterministic tick-driven simulation of one scenario.
class Simulator {
 public:
  /// Validates the config; throws Errc::validation.
  explicit Simulator(ScenarioConfig config);

  void step();
  RunResult run();
  RunResult result() const;

  Tick now() const { return now_; }
  const DatacenterState& state() const { return state_; }
  const Avad& avad() const { return avad_; }
  const Cval& cval() const { return cval_; }
  const WorkloadStore& store() const { return store_; }
  const Metrics& metrics() const { return metrics_; }
  const std::vector<BreachAttempt>& attempts() const { return attempts_; }
  const std::set<VmId>& attacker_ids() const { return attackers_; }
  const ScenarioConfig& config() const { return config_; }

 private:
  void complete_tasks();
  void admit_arrivals();
  void admit_application(const ResourceVector& demand, Tick duration);
  void generate_usage_and_links();
  void maybe_inject_attack();
  void security_and_management();
  void release_vm(VmId vm);
  void resolve_attempts();
  void account_tick();
  void log(const std::vector<Action>& actions);

  ScenarioConfig config_;
  FlavorCatalogue catalogue_;
  std::mt19937_64 rng_;
  DatacenterState state_;
  Avad avad_;
  Cval cval_;
  WorkloadStore store_;
  WorkloadAnalyzer analyzer_;
  ManagerConfig manager_config_;

  Tick now_ = 0;
  std::uint32_t next_app_ = 0;
  std::uint32_t next_user_ = 0;
  bool attack_injected_ = false;
  std::optional<AppId> masquerade_app_;
  std::set<VmId> attackers_;
  std::vector<double> phase_;  // usage-signal phase per VM id
  std::vector<BreachAttempt> attempts_;

  Metrics metrics_;
  std::vector<TickRow> ticks_;
  std::vector<Action> actions_;
  std::vector<AuditRecord> audits_;
};

RunResult run(const ScenarioConfig& config);

}  // namespace vmshield
