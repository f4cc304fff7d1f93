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
#include "vmshield/security.hpp"

#include <algorithm>
#include <sstream>

#include "vmshield/error.hpp"

namespace vmshield {

std::optional<AppId> Avad::group_of(VmId vm) const {
  auto it = group_of_.find(vm);
  if (it == group_of_.end()) return std::nullopt;
  return it->second;
}

void Avad::register_vm(VmId vm, AppId app) {
  if (auto existing = group_of(vm)) {
    if (*existing == app) return;
    std::ostringstream msg;
    msg << "vm " << vm << " serves applications " << *existing << " and " << app;
    throw Error(Errc::model_violation, msg.str());
  }
  auto& members = members_[app];
  for (VmId peer : members) pairs_.insert(Link(vm, peer));
  members.insert(vm);
  group_of_.emplace(vm, app);
}

void Avad::unregister_vm(VmId vm) {
  auto it = group_of_.find(vm);
  if (it == group_of_.end()) return;
  auto members = members_.find(it->second);
  members->second.erase(vm);
  for (VmId peer : members->second) pairs_.erase(Link(vm, peer));
  if (members->second.empty()) members_.erase(members);
  group_of_.erase(it);
}

Avad build_avad(std::span<const Application> applications) {
  Avad avad;
  for (const Application& app : applications) {
    for (const Task& task : app.tasks) {
      if (!task.assigned_vm) {
        std::ostringstream msg;
        msg << "task " << task.id << " of application " << app.id << " is unassigned";
        throw Error(Errc::precondition, msg.str());
      }
      avad.register_vm(*task.assigned_vm, app.id);
    }
  }
  return avad;
}

void Cval::observe(const Link& link, Tick now) {
  auto [it, inserted] = entries_.try_emplace(link, CvalEntry{link, now, now});
  if (!inserted) it->second.last_seen = std::max(it->second.last_seen, now);
}

std::size_t Cval::erase_involving(VmId vm) {
  return std::erase_if(entries_, [vm](const auto& kv) { return kv.first.involves(vm); });
}

std::optional<CvalEntry> Cval::find(const Link& link) const {
  auto it = entries_.find(link);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<CvalEntry> Cval::entries() const {
  std::vector<CvalEntry> out;
  out.reserve(entries_.size());
  for (const auto& [link, entry] : entries_) out.push_back(entry);
  std::stable_sort(out.begin(), out.end(),
                   [](const CvalEntry& a, const CvalEntry& b) { return a.first_seen < b.first_seen; });
  return out;
}

Cval& observe_link(Cval& cval, const Link& link, Tick now, const DatacenterState& state) {
  for (VmId end : {link.first(), link.second()}) {
    if (!state.has_vm(end) || !state.vm(end).active()) {
      std::ostringstream msg;
      msg << "link endpoint vm " << end << " is not active";
      throw Error(Errc::stale_link, msg.str());
    }
  }
  cval.observe(link, now);
  return cval;
}

Cval& observe_link(Cval& cval, VmId a, VmId b, Tick now, const DatacenterState& state) {
  return observe_link(cval, Link(a, b), now, state);
}

std::string_view to_string(AttackerPolicy policy) {
  return policy == AttackerPolicy::both ? "both" : "unregistered_only";
}

std::optional<AttackerPolicy> parse_attacker_policy(std::string_view text) {
  if (text == "both") return AttackerPolicy::both;
  if (text == "unregistered_only") return AttackerPolicy::unregistered_only;
  return std::nullopt;
}

std::set<VmId> identify_attackers(const std::set<Link>& unauthorized, const Avad& avad,
                                  AttackerPolicy policy) {
  std::set<VmId> attackers;
  for (const Link& link : unauthorized) {
    const bool first_known = avad.group_of(link.first()).has_value();
    const bool second_known = avad.group_of(link.second()).has_value();
    if (!first_known) attackers.insert(link.first());
    if (!second_known) attackers.insert(link.second());
    if (first_known && second_known && policy == AttackerPolicy::both) {
      attackers.insert(link.first());
      attackers.insert(link.second());
    }
  }
  return attackers;
}

SecurityVerdict audit(const Cval& cval, const Avad& avad, Tick now, Tick liveness_window,
                      AttackerPolicy policy) {
  SecurityVerdict verdict;
  verdict.issued_at = now;
  cval.for_each([&](const CvalEntry& entry) {
    if (entry.last_seen < now - liveness_window) return;
    if (!avad.authorizes(entry.link)) verdict.unauthorized_links.insert(entry.link);
  });
  verdict.attacker_vm_ids = identify_attackers(verdict.unauthorized_links, avad, policy);
  return verdict;
}

std::vector<Action> apply_verdict(const SecurityVerdict& verdict, DatacenterState& state, Cval& cval,
                                  Tick now) {
  std::vector<Action> actions;
  for (const Link& link : verdict.unauthorized_links) cval.erase(link);
  for (VmId vm : verdict.attacker_vm_ids) {
    const ServerId host = state.vm(vm).host_server;
    if (!state.terminate_vm(vm, now)) continue;
    cval.erase_involving(vm);
    actions.push_back(Action{now, ActionKind::terminate, vm.value, host, std::nullopt,
                             ActionReason::security});
  }
  return actions;
}

}  // namespace vmshield
