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

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vmshield/ids.hpp"
#include "vmshield/model.hpp"
#include "vmshield/resource.hpp"
#include "vmshield/security.hpp"
#include "vmshield/workload.hpp"

namespace vmshield {

struct VmFlavor {
  std::string name;
  ResourceVector capacity;

  bool operator==(const VmFlavor&) const = default;
};

/// Flavor catalogue sorted by scalar size. The size key of a vector is the
/// mean over components of value / (largest catalogue value in that component).
class FlavorCatalogue {
 public:
  /// Throws Errc::configuration for an empty catalogue, an invalid capacity or
  /// two flavors with the same size key.
  explicit FlavorCatalogue(std::vector<VmFlavor> flavors);

  double size_key(const ResourceVector& v) const;
  const std::vector<VmFlavor>& flavors() const { return flavors_; }
  const VmFlavor* find(const std::string& name) const;
  const ResourceVector& reference() const { return reference_; }

 private:
  std::vector<VmFlavor> flavors_;
  ResourceVector reference_;
};

struct SplitPolicy {
  std::size_t fan_out = 1;
  std::size_t max_fan_out = 16;
};

/// Splits an application's total demand into `fan_out` equal tasks.
/// Throws Errc::precondition for a zero demand and Errc::policy for a fan-out
/// of zero or above the cap.
std::vector<Task> split_application(AppId app, const ResourceVector& total_demand, Tick task_duration,
                                    const SplitPolicy& policy);

/// Smallest flavor that fits the task. Throws Errc::unsatisfiable_task.
Vm provision_vm(const Task& task, const FlavorCatalogue& catalogue);

struct ServerLoad {
  ServerId id;
  ResourceVector capacity;
  ResourceVector reserved;
  ResourceVector predicted;
  bool active = false;
};

/// Lightweight copy of per-server load used while planning, so a batch of
/// moves can be evaluated before the datacenter is touched.
class LoadView {
 public:
  /// `forecasts` may be null, in which case predicted load equals reservation.
  /// Hosted VMs missing from `forecasts` contribute their capacity.
  static LoadView build(const DatacenterState& state, const ForecastMap* forecasts);

  const ServerLoad& at(ServerId id) const { return servers_.at(id.value); }
  const std::vector<ServerLoad>& servers() const { return servers_; }

  void add(ServerId id, const ResourceVector& capacity, const ResourceVector& forecast);
  void remove(ServerId id, const ResourceVector& capacity, const ResourceVector& forecast);
  void set_active(ServerId id, bool active) { servers_.at(id.value).active = active; }

 private:
  std::vector<ServerLoad> servers_;
};

struct Placement {
  ServerId server;
  bool requires_power_on = false;

  bool operator==(const Placement&) const = default;
};

struct PlacementOptions {
  std::set<ServerId> excluded;
  bool allow_power_on = true;
  /// When set, the target's predicted load plus this forecast must stay
  /// within overload_margin * capacity.
  std::optional<ResourceVector> forecast;
  double overload_margin = 1.0;
};

/// Best fit: the active server left with the least scalar remaining capacity
/// (lowest id on ties); otherwise the smallest off server that fits.
std::optional<Placement> choose_placement(const LoadView& view, const ResourceVector& capacity,
                                          const PlacementOptions& options,
                                          const FlavorCatalogue& catalogue);

/// Throws Errc::admission_rejected when no server can host the VM.
Placement place_vm(const Vm& vm, const DatacenterState& state, const FlavorCatalogue& catalogue);

enum class PlanReason { overload, underload, security };

struct Move {
  VmId vm;
  ServerId from;
  ServerId to;

  bool operator==(const Move&) const = default;
};

struct MigrationPlan {
  std::vector<Move> moves;
  std::vector<ServerId> power_ons;
  std::vector<ServerId> shutdowns;
  PlanReason reason = PlanReason::overload;
  /// Overload plans only: the remaining forecast still exceeds capacity.
  bool unresolved = false;

  bool empty() const { return moves.empty() && power_ons.empty() && shutdowns.empty(); }
};

/// True when `forecast` exceeds margin * capacity in some component.
bool is_overloaded(const ResourceVector& forecast, const ResourceVector& capacity, double margin = 1.0);
/// True when every component of forecast / capacity is below `threshold`.
bool is_underloaded(const ResourceVector& forecast, const ResourceVector& capacity, double threshold);

/// Migrates the largest hosted VMs (by size key, lowest id on ties) until the
/// forecast of the VMs left behind fits. Updates `view` with the planned moves.
/// Throws Errc::precondition when the server is not overloaded.
MigrationPlan handle_overload(ServerId server, const ResourceVector& forecast,
                              const ForecastMap& vm_forecasts, const DatacenterState& state,
                              const FlavorCatalogue& catalogue, LoadView& view,
                              double overload_margin = 1.0);
MigrationPlan handle_overload(ServerId server, const ResourceVector& forecast,
                              const ForecastMap& vm_forecasts, const DatacenterState& state,
                              const FlavorCatalogue& catalogue, double overload_margin = 1.0);

/// All-or-nothing consolidation onto other active servers followed by a
/// shutdown. Returns an empty plan if any hosted VM cannot be rehomed.
/// Throws Errc::precondition unless the server is active and underloaded.
MigrationPlan handle_underload(ServerId server, const ResourceVector& forecast, double threshold,
                               const ForecastMap& vm_forecasts, const DatacenterState& state,
                               const FlavorCatalogue& catalogue, LoadView& view,
                               double overload_margin = 1.0);
MigrationPlan handle_underload(ServerId server, const ResourceVector& forecast, double threshold,
                               const ForecastMap& vm_forecasts, const DatacenterState& state,
                               const FlavorCatalogue& catalogue, double overload_margin = 1.0);

std::vector<Action> apply_plan(const MigrationPlan& plan, DatacenterState& state, Tick now);

struct ManagerConfig {
  double underload_threshold = 0.2;
  double overload_margin = 1.0;
  bool consolidation = true;
  bool relocate_victims = false;
};

struct CycleOutcome {
  std::vector<Action> actions;
  std::vector<VmId> terminated;
  std::vector<AppId> failed_applications;
  std::size_t migrations = 0;
  std::size_t overload_unresolved = 0;
};

/// One control step: security terminations, then overload plans, then
/// underload plans. Without forecasts only the security step runs.
CycleOutcome management_cycle(DatacenterState& state, const ForecastMap* forecasts,
                              const SecurityVerdict& verdict, Cval& cval,
                              const FlavorCatalogue& catalogue, const ManagerConfig& config, Tick now);

struct CompletionEvent {
  AppId application;
  Tick completion_time = 0;
  bool failed = false;

  bool operator==(const CompletionEvent&) const = default;
};

/// Stamps completion_time = latest task finish. Throws Errc::precondition if a
/// task has not finished.
CompletionEvent integrate_results(Application& app, Tick now);

}  // namespace vmshield
