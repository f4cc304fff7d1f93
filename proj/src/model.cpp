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
#include "vmshield/model.hpp"

#include <algorithm>
#include <sstream>

#include "vmshield/error.hpp"

namespace vmshield {

Link::Link(VmId a, VmId b) : first_(std::min(a, b)), second_(std::max(a, b)) {
  if (a == b) {
    std::ostringstream msg;
    msg << "self-link on vm " << a;
    throw Error(Errc::model_violation, msg.str());
  }
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::terminate: return "terminate";
    case ActionKind::migrate: return "migrate";
    case ActionKind::power_on: return "power_on";
    case ActionKind::power_off: return "power_off";
    case ActionKind::reject: return "reject";
  }
  return "unknown";
}

std::string_view to_string(ActionReason reason) {
  switch (reason) {
    case ActionReason::security: return "security";
    case ActionReason::overload: return "overload";
    case ActionReason::underload: return "underload";
    case ActionReason::placement: return "placement";
    case ActionReason::admission: return "admission";
    case ActionReason::relocation: return "relocation";
  }
  return "unknown";
}

ResourceVector server_utilization(const Server& server, const std::vector<const Vm*>& vms) {
  ResourceVector total;
  for (const Vm* vm : vms) {
    if (vm->host_server != server.id) {
      throw Error(Errc::precondition, "utilization: vm not hosted on server");
    }
    total += vm->capacity;
  }
  ResourceVector ratio;
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
    if (server.capacity[d] <= 0.0) {
      if (server.active()) {
        throw Error(Errc::configuration,
                    "server has zero " + std::string(kDimensionNames[d]) + " capacity");
      }
      continue;
    }
    ratio[d] = total[d] / server.capacity[d];
  }
  return ratio;
}

ServerId DatacenterState::add_server(const ResourceVector& capacity, PowerState power) {
  if (!rv_valid(capacity)) throw Error(Errc::configuration, "invalid server capacity");
  const ServerId id{static_cast<std::uint32_t>(servers_.size())};
  servers_.push_back(Server{id, capacity, power, {}});
  return id;
}

const Server& DatacenterState::server(ServerId id) const {
  if (id.value >= servers_.size()) throw Error(Errc::precondition, "unknown server id");
  return servers_[id.value];
}

Server& DatacenterState::mutable_server(ServerId id) {
  return const_cast<Server&>(static_cast<const DatacenterState&>(*this).server(id));
}

const Vm& DatacenterState::vm(VmId id) const {
  if (id.value >= vms_.size()) throw Error(Errc::precondition, "unknown vm id");
  return vms_[id.value];
}

Vm& DatacenterState::mutable_vm(VmId id) {
  return const_cast<Vm&>(static_cast<const DatacenterState&>(*this).vm(id));
}

ResourceVector DatacenterState::reserved(ServerId id) const {
  ResourceVector total;
  for (VmId vm : server(id).hosted_vm_ids) total += vms_[vm.value].capacity;
  return total;
}

ResourceVector DatacenterState::remaining(ServerId id) const {
  return server(id).capacity - reserved(id);
}

ResourceVector DatacenterState::utilization(ServerId id) const {
  const Server& s = server(id);
  std::vector<const Vm*> hosted;
  hosted.reserve(s.hosted_vm_ids.size());
  for (VmId vm : s.hosted_vm_ids) hosted.push_back(&vms_[vm.value]);
  return server_utilization(s, hosted);
}

void DatacenterState::power_on(ServerId id) { mutable_server(id).power_state = PowerState::active; }

void DatacenterState::power_off(ServerId id) {
  Server& s = mutable_server(id);
  if (!s.hosted_vm_ids.empty()) {
    throw Error(Errc::model_violation, "cannot power off a server that hosts VMs");
  }
  s.power_state = PowerState::off;
}

VmId DatacenterState::admit_vm(Vm vm, ServerId host) {
  Server& s = mutable_server(host);
  if (!s.active()) throw Error(Errc::model_violation, "cannot host a VM on an off server");
  if (!rv_valid(vm.capacity)) throw Error(Errc::model_violation, "invalid VM capacity");
  if (!rv_fits(vm.capacity, remaining(host))) {
    throw Error(Errc::admission_rejected, "VM does not fit on the chosen server");
  }
  vm.id = VmId{static_cast<std::uint32_t>(vms_.size())};
  vm.host_server = host;
  vm.state = VmState::active;
  vm.terminated_at.reset();
  s.hosted_vm_ids.insert(vm.id);
  vms_.push_back(std::move(vm));
  return vms_.back().id;
}

void DatacenterState::migrate_vm(VmId id, ServerId target) {
  Vm& v = mutable_vm(id);
  if (!v.active()) throw Error(Errc::model_violation, "only active VMs migrate");
  if (v.host_server == target) return;
  Server& dst = mutable_server(target);
  if (!dst.active()) throw Error(Errc::model_violation, "migration target is off");
  if (!rv_fits(v.capacity, remaining(target))) {
    throw Error(Errc::admission_rejected, "migration target lacks capacity");
  }
  v.state = VmState::migrating;
  mutable_server(v.host_server).hosted_vm_ids.erase(id);
  dst.hosted_vm_ids.insert(id);
  v.host_server = target;
  v.state = VmState::active;
}

bool DatacenterState::terminate_vm(VmId id, Tick now) {
  Vm& v = mutable_vm(id);
  if (v.state == VmState::terminated) return false;
  mutable_server(v.host_server).hosted_vm_ids.erase(id);
  v.state = VmState::terminated;
  v.terminated_at = now;
  return true;
}

std::size_t DatacenterState::active_server_count() const {
  return static_cast<std::size_t>(
      std::count_if(servers_.begin(), servers_.end(), [](const Server& s) { return s.active(); }));
}

std::size_t DatacenterState::count_vms(VmState state) const {
  return static_cast<std::size_t>(
      std::count_if(vms_.begin(), vms_.end(), [state](const Vm& v) { return v.state == state; }));
}

InvariantReport DatacenterState::check_invariants() const {
  InvariantReport report;
  std::vector<int> hosted_count(vms_.size(), 0);
  for (const Server& s : servers_) {
    if (!s.active() && !s.hosted_vm_ids.empty()) ++report.off_servers_hosting;
    ResourceVector total;
    for (VmId id : s.hosted_vm_ids) {
      const Vm& v = vms_[id.value];
      if (v.state == VmState::terminated) ++report.zombie_vms;
      if (v.host_server != s.id) ++report.placement_violations;
      ++hosted_count[id.value];
      total += v.capacity;
    }
    if (!rv_fits(total, s.capacity)) ++report.capacity_violations;
  }
  for (const Vm& v : vms_) {
    if (v.state == VmState::terminated) continue;
    if (hosted_count[v.id.value] != 1 || !servers_[v.host_server.value].active()) {
      ++report.placement_violations;
    }
  }
  return report;
}

}  // namespace vmshield
