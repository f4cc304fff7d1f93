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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vmshield/ids.hpp"
#include "vmshield/resource.hpp"

namespace vmshield {

enum class PowerState { active, off };
enum class VmState { active, migrating, terminated };

struct Server {
  ServerId id;
  ResourceVector capacity;
  PowerState power_state = PowerState::off;
  std::set<VmId> hosted_vm_ids;

  bool active() const { return power_state == PowerState::active; }
};

struct Vm {
  VmId id;
  ResourceVector capacity;
  UserId owner_user;
  /// Empty for VMs that belong to no registered application (attackers).
  std::optional<AppId> application_id;
  ServerId host_server;
  VmState state = VmState::active;
  std::string flavor;
  std::optional<Tick> terminated_at;

  bool active() const { return state == VmState::active; }
};

struct Task {
  TaskId id;
  AppId application;
  ResourceVector demand;
  Tick duration = 1;
  std::optional<VmId> assigned_vm;
  std::optional<Tick> started_at;
  std::optional<Tick> finished_at;
  bool aborted = false;
};

struct Application {
  AppId id;
  UserId user;
  std::vector<Task> tasks;
  Tick arrival_time = 0;
  std::optional<Tick> completion_time;
  bool failed = false;
};

/// Unordered pair of distinct VMs. Stored with the smaller id first so that
/// equality, ordering and hashing ignore endpoint order.
class Link {
 public:
  /// Throws Errc::model_violation for a self-link.
  Link(VmId a, VmId b);

  VmId first() const { return first_; }
  VmId second() const { return second_; }
  bool involves(VmId vm) const { return first_ == vm || second_ == vm; }
  VmId other(VmId vm) const { return vm == first_ ? second_ : first_; }

  auto operator<=>(const Link&) const = default;

 private:
  VmId first_;
  VmId second_;
};

struct LinkHash {
  std::size_t operator()(const Link& l) const noexcept {
    return (static_cast<std::size_t>(l.first().value) << 32) ^ l.second().value;
  }
};

enum class ActionKind { terminate, migrate, power_on, power_off, reject };
enum class ActionReason { security, overload, underload, placement, admission, relocation };

std::string_view to_string(ActionKind kind);
std::string_view to_string(ActionReason reason);

/// One entry of the action log. `subject` is a VM id for terminate/migrate, a
/// server id for power actions and an application id for reject.
struct Action {
  Tick t = 0;
  ActionKind kind = ActionKind::terminate;
  std::uint32_t subject = 0;
  std::optional<ServerId> from;
  std::optional<ServerId> to;
  ActionReason reason = ActionReason::security;

  bool operator==(const Action&) const = default;
};

/// Per-component ratio of the summed VM capacity to the server capacity.
/// Throws Errc::configuration for a zero-capacity component.
ResourceVector server_utilization(const Server& server, const std::vector<const Vm*>& vms);

struct InvariantReport {
  std::uint64_t capacity_violations = 0;
  std::uint64_t zombie_vms = 0;           // terminated VMs still listed as hosted
  std::uint64_t placement_violations = 0; // active VMs not hosted exactly once on an active server
  std::uint64_t off_servers_hosting = 0;

  bool ok() const {
    return capacity_violations == 0 && zombie_vms == 0 && placement_violations == 0 &&
           off_servers_hosting == 0;
  }
};

/// The mutable world the event loop evolves: servers, VMs and applications.
/// All mutation goes through members that keep capacity safety intact.
class DatacenterState {
 public:
  ServerId add_server(const ResourceVector& capacity, PowerState power = PowerState::off);

  const std::vector<Server>& servers() const { return servers_; }
  const Server& server(ServerId id) const;
  const std::vector<Vm>& vms() const { return vms_; }
  const Vm& vm(VmId id) const;
  bool has_vm(VmId id) const { return id.value < vms_.size(); }

  /// Sum of capacities of VMs hosted on the server (reservation model).
  ResourceVector reserved(ServerId id) const;
  ResourceVector remaining(ServerId id) const;
  ResourceVector utilization(ServerId id) const;

  void power_on(ServerId id);
  /// Requires the server to host nothing.
  void power_off(ServerId id);

  /// Hosts a new VM on an active server that can fit it and returns its id.
  VmId admit_vm(Vm vm, ServerId host);
  void migrate_vm(VmId id, ServerId target);
  /// Returns false when the VM was already terminated.
  bool terminate_vm(VmId id, Tick now);

  std::map<AppId, Application>& applications() { return applications_; }
  const std::map<AppId, Application>& applications() const { return applications_; }

  std::size_t active_server_count() const;
  std::size_t count_vms(VmState state) const;
  std::size_t created_vms() const { return vms_.size(); }

  InvariantReport check_invariants() const;

 private:
  Server& mutable_server(ServerId id);
  Vm& mutable_vm(VmId id);

  std::vector<Server> servers_;
  std::vector<Vm> vms_;
  std::map<AppId, Application> applications_;
};

}  // namespace vmshield
