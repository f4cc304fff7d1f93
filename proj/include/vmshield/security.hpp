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

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "vmshield/ids.hpp"
#include "vmshield/model.hpp"

namespace vmshield {

/// Authorized VM access database: the complete graph over each
/// application's VMs, and nothing else.
class Avad {
 public:
  bool authorizes(const Link& link) const { return pairs_.contains(link); }
  const std::set<Link>& authorized_pairs() const { return pairs_; }
  std::optional<AppId> group_of(VmId vm) const;
  const std::map<VmId, AppId>& groups() const { return group_of_; }

  /// Adds `vm` to the application's group and authorizes its pairs with the
  /// existing members. Throws Errc::model_violation if the VM is already
  /// registered to another application.
  void register_vm(VmId vm, AppId app);
  void unregister_vm(VmId vm);

 private:
  std::set<Link> pairs_;
  std::map<VmId, AppId> group_of_;
  std::map<AppId, std::set<VmId>> members_;
};

/// Builds the AVAD from the task assignments of `applications`. Throws
/// Errc::precondition for an unassigned task and Errc::model_violation for a
/// VM that serves two applications.
Avad build_avad(std::span<const Application> applications);

struct CvalEntry {
  Link link;
  Tick first_seen = 0;
  Tick last_seen = 0;

  bool operator==(const CvalEntry&) const = default;
};

/// Current VM access links log: one entry per observed unordered pair.
class Cval {
 public:
  /// Records an observation without checking endpoint liveness.
  void observe(const Link& link, Tick now);
  bool erase(const Link& link) { return entries_.erase(link) > 0; }
  std::size_t erase_involving(VmId vm);

  std::optional<CvalEntry> find(const Link& link) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// Entries ordered by first_seen, ties by link.
  std::vector<CvalEntry> entries() const;

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [link, entry] : entries_) f(entry);
  }

 private:
  std::map<Link, CvalEntry> entries_;
};

/// Checked observation: throws Errc::model_violation for a self-link and
/// Errc::stale_link when either endpoint is not Active.
Cval& observe_link(Cval& cval, const Link& link, Tick now, const DatacenterState& state);
Cval& observe_link(Cval& cval, VmId a, VmId b, Tick now, const DatacenterState& state);

enum class AttackerPolicy { both, unregistered_only };

std::string_view to_string(AttackerPolicy policy);
std::optional<AttackerPolicy> parse_attacker_policy(std::string_view text);

struct SecurityVerdict {
  std::set<Link> unauthorized_links;
  std::set<VmId> attacker_vm_ids;
  Tick issued_at = 0;

  bool empty() const { return unauthorized_links.empty() && attacker_vm_ids.empty(); }
  bool operator==(const SecurityVerdict&) const = default;
};

/// Endpoints to blame for the given unauthorized links. Unregistered
/// endpoints are always attackers; under AttackerPolicy::both a link between
/// two registered (distinct-application) VMs flags both ends.
std::set<VmId> identify_attackers(const std::set<Link>& unauthorized, const Avad& avad,
                                  AttackerPolicy policy = AttackerPolicy::both);

/// Live CVAL pairs (last_seen >= now - liveness_window) that the AVAD does not
/// authorize, plus the attackers they implicate.
SecurityVerdict audit(const Cval& cval, const Avad& avad, Tick now, Tick liveness_window,
                      AttackerPolicy policy = AttackerPolicy::both);

/// Terminates every attacker VM still alive, drops the verdict's links and any
/// CVAL entry touching a terminated VM. Already terminated VMs are skipped.
std::vector<Action> apply_verdict(const SecurityVerdict& verdict, DatacenterState& state, Cval& cval,
                                  Tick now);

}  // namespace vmshield
