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
#include "vmshield/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vmshield/error.hpp"

namespace vmshield {

namespace {

constexpr UserId kAttackerUser{0xFFFFFFFFu};

Vm attacker_vm(const VmFlavor& flavor) {
  Vm vm;
  vm.capacity = flavor.capacity;
  vm.flavor = flavor.name;
  vm.owner_user = kAttackerUser;
  return vm;
}

/// Active VMs that belong to a registered application, in id order.
std::vector<VmId> registered_active_vms(const DatacenterState& state) {
  std::vector<VmId> out;
  for (const auto& [id, app] : state.applications()) {
    for (const Task& task : app.tasks) {
      if (task.assigned_vm && state.vm(*task.assigned_vm).active()) out.push_back(*task.assigned_vm);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

VmId admit_attacker(AttackContext& ctx, ServerId host) {
  const VmId id = ctx.state.admit_vm(attacker_vm(ctx.attacker_flavor), host);
  if (ctx.masquerade_app) ctx.avad.register_vm(id, *ctx.masquerade_app);
  return id;
}

BreachAttempt open_attempt(AttackContext& ctx, std::vector<VmId> attackers, VmId target,
                           std::vector<Link> links) {
  for (const Link& link : links) observe_link(ctx.cval, link, ctx.now, ctx.state);
  BreachAttempt attempt;
  attempt.attacker_vm_ids = std::move(attackers);
  attempt.target_vm_id = target;
  attempt.links = std::move(links);
  attempt.link_established_at = ctx.now;
  attempt.completes_at = ctx.now + ctx.dwell;
  return attempt;
}

bool has_room(const DatacenterState& state, ServerId server, const ResourceVector& capacity) {
  return state.server(server).active() && rv_fits(capacity, state.remaining(server));
}

[[noreturn]] void infeasible(const std::string& what) {
  throw Error(Errc::injection_infeasible, what);
}

}  // namespace

std::string_view to_string(BreachOutcome outcome) {
  switch (outcome) {
    case BreachOutcome::pending: return "pending";
    case BreachOutcome::prevented: return "prevented";
    case BreachOutcome::succeeded: return "succeeded";
  }
  return "pending";
}

BreachOutcome resolve_attempt(BreachAttempt& attempt, const DatacenterState& state, Tick now) {
  if (attempt.outcome != BreachOutcome::pending) return attempt.outcome;
  bool all_terminated = true;
  Tick last_termination = attempt.link_established_at;
  for (VmId id : attempt.attacker_vm_ids) {
    const Vm& vm = state.vm(id);
    if (vm.state != VmState::terminated || !vm.terminated_at ||
        *vm.terminated_at >= attempt.completes_at) {
      all_terminated = false;
      break;
    }
    last_termination = std::max(last_termination, *vm.terminated_at);
  }
  if (all_terminated) {
    attempt.outcome = BreachOutcome::prevented;
    attempt.resolved_at = last_termination;
  } else if (now >= attempt.completes_at) {
    attempt.outcome = BreachOutcome::succeeded;
    attempt.resolved_at = attempt.completes_at;
  }
  return attempt.outcome;
}

// ------------------------------------------------------------- injectors

AttackInjection inject_co_residency(AttackContext& ctx) {
  std::vector<AppId> apps;
  for (const auto& [id, app] : ctx.state.applications()) {
    const bool has_active = std::any_of(app.tasks.begin(), app.tasks.end(), [&](const Task& t) {
      return t.assigned_vm && ctx.state.vm(*t.assigned_vm).active();
    });
    if (has_active) apps.push_back(id);
  }
  if (apps.empty()) infeasible("co-residency: no application has a placed VM");
  std::shuffle(apps.begin(), apps.end(), ctx.rng);

  for (AppId app_id : apps) {
    std::vector<VmId> victims;
    for (const Task& t : ctx.state.applications().at(app_id).tasks) {
      if (t.assigned_vm && ctx.state.vm(*t.assigned_vm).active()) victims.push_back(*t.assigned_vm);
    }
    std::shuffle(victims.begin(), victims.end(), ctx.rng);
    for (VmId victim : victims) {
      const ServerId host = ctx.state.vm(victim).host_server;
      if (!has_room(ctx.state, host, ctx.attacker_flavor.capacity)) continue;
      AttackInjection out;
      const VmId attacker = admit_attacker(ctx, host);
      out.attackers.push_back(attacker);
      out.attempts.push_back(open_attempt(ctx, {attacker}, victim, {Link(attacker, victim)}));
      return out;
    }
  }
  infeasible("co-residency: no victim server has room for the attacker");
}

AttackInjection inject_multi_hijack(AttackContext& ctx, std::uint32_t count) {
  if (count == 0) throw Error(Errc::precondition, "multi-hijack needs at least one attacker");
  std::vector<VmId> candidates = registered_active_vms(ctx.state);
  std::shuffle(candidates.begin(), candidates.end(), ctx.rng);

  AttackInjection out;
  for (VmId victim : candidates) {
    if (out.attackers.size() == count) break;
    const ServerId host = ctx.state.vm(victim).host_server;
    if (!has_room(ctx.state, host, ctx.attacker_flavor.capacity)) continue;
    const VmId attacker = admit_attacker(ctx, host);
    out.attackers.push_back(attacker);
    out.attempts.push_back(open_attempt(ctx, {attacker}, victim, {Link(attacker, victim)}));
  }
  if (out.attackers.empty()) infeasible("multi-hijack: no victim server has room for an attacker");
  if (out.attackers.size() < count) ++out.warnings;
  return out;
}

AttackInjection inject_grouped_cascade(AttackContext& ctx, std::uint32_t chain_length) {
  if (chain_length < 2) throw Error(Errc::precondition, "grouped cascade needs a chain of at least 2");
  std::vector<VmId> candidates = registered_active_vms(ctx.state);
  std::shuffle(candidates.begin(), candidates.end(), ctx.rng);
  const ResourceVector& cap = ctx.attacker_flavor.capacity;

  for (VmId target : candidates) {
    const ServerId target_host = ctx.state.vm(target).host_server;
    if (!has_room(ctx.state, target_host, cap)) continue;

    // Plan the whole chain before touching the datacenter.
    LoadView view = LoadView::build(ctx.state, nullptr);
    view.add(target_host, cap, cap);
    std::vector<Placement> upstream;
    for (std::uint32_t i = 0; i + 1 < chain_length; ++i) {
      const auto p = choose_placement(view, cap, PlacementOptions{}, ctx.catalogue);
      if (!p) infeasible("grouped-cascade: no room for the attacker chain");
      if (p->requires_power_on) view.set_active(p->server, true);
      view.add(p->server, cap, cap);
      upstream.push_back(*p);
    }

    AttackInjection out;
    std::vector<VmId> chain;
    for (const Placement& p : upstream) {
      if (p.requires_power_on && !ctx.state.server(p.server).active()) {
        ctx.state.power_on(p.server);
        out.actions.push_back(Action{ctx.now, ActionKind::power_on, p.server.value, std::nullopt,
                                     std::nullopt, ActionReason::placement});
      }
      chain.push_back(admit_attacker(ctx, p.server));
    }
    chain.push_back(admit_attacker(ctx, target_host));

    std::vector<Link> links;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) links.emplace_back(chain[i], chain[i + 1]);
    links.emplace_back(chain.back(), target);
    out.attackers = chain;
    out.attempts.push_back(open_attempt(ctx, chain, target, std::move(links)));
    return out;
  }
  infeasible("grouped-cascade: no target server has room for the last attacker");
}

double account_energy(const DatacenterState& state, const EnergyModel& model) {
  double total = 0.0;
  for (const Server& s : state.servers()) {
    if (!s.active()) continue;
    total += model.idle_power +
             (model.max_power - model.idle_power) * rv_mean_component(state.utilization(s.id));
  }
  return total;
}

// ------------------------------------------------------------- simulator

Simulator::Simulator(ScenarioConfig config)
    : config_((validate(config), std::move(config))),
      catalogue_(config_.flavors),
      rng_(config_.seed),
      store_(config_.predictor.retention),
      analyzer_(AnalyzerConfig{config_.predictor.lags, config_.predictor.learning_rate,
                               config_.predictor.epochs, config_.predictor.retrain_every,
                               config_.management_interval}) {
  for (const ServerGroup& g : config_.servers) {
    for (std::uint32_t i = 0; i < g.count; ++i) {
      state_.add_server(g.capacity, g.initially_active ? PowerState::active : PowerState::off);
    }
  }
  manager_config_.underload_threshold = config_.underload_threshold;
  manager_config_.overload_margin = config_.overload_margin;
  manager_config_.consolidation = config_.consolidation;
  manager_config_.relocate_victims = config_.relocate_victims;
}

void Simulator::step() {
  complete_tasks();
  admit_arrivals();
  generate_usage_and_links();
  maybe_inject_attack();
  security_and_management();
  resolve_attempts();
  account_tick();
  ++now_;
}

RunResult Simulator::run() {
  while (now_ < config_.duration) step();
  return result();
}

RunResult Simulator::result() const {
  RunResult r;
  r.seed = config_.seed;
  r.metrics = metrics_;
  r.metrics.vms_created = state_.created_vms();
  r.metrics.breaches_pending = static_cast<std::uint64_t>(
      std::count_if(attempts_.begin(), attempts_.end(),
                    [](const BreachAttempt& a) { return a.outcome == BreachOutcome::pending; }));
  r.ticks = ticks_;
  r.actions = actions_;
  r.audits = audits_;
  r.attempts = attempts_;
  return r;
}

void Simulator::log(const std::vector<Action>& actions) {
  actions_.insert(actions_.end(), actions.begin(), actions.end());
}

void Simulator::release_vm(VmId vm) {
  state_.terminate_vm(vm, now_);
  avad_.unregister_vm(vm);
  cval_.erase_involving(vm);
  analyzer_.forget(vm);
}

void Simulator::complete_tasks() {
  auto& apps = state_.applications();
  for (auto it = apps.begin(); it != apps.end();) {
    Application& app = it->second;
    bool all_done = true;
    for (Task& task : app.tasks) {
      if (!task.finished_at && task.started_at && *task.started_at + task.duration <= now_) {
        task.finished_at = now_;
        if (task.assigned_vm) release_vm(*task.assigned_vm);
      }
      all_done = all_done && task.finished_at.has_value();
    }
    if (!all_done) {
      ++it;
      continue;
    }
    // Aborted tasks may still own live VMs of a failed application.
    for (const Task& task : app.tasks) {
      if (task.assigned_vm && state_.vm(*task.assigned_vm).active()) release_vm(*task.assigned_vm);
    }
    const CompletionEvent done = integrate_results(app, now_);
    if (done.failed) {
      ++metrics_.applications_failed;
    } else {
      ++metrics_.applications_completed;
    }
    it = apps.erase(it);
  }
}

void Simulator::admit_arrivals() {
  if (config_.arrivals.rate <= 0.0) return;
  std::poisson_distribution<int> arrivals(config_.arrivals.rate);
  const int n = arrivals(rng_);
  const auto& a = config_.arrivals;
  for (int i = 0; i < n; ++i) {
    ResourceVector demand;
    for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
      std::uniform_real_distribution<double> u(a.demand_min[d], a.demand_max[d]);
      demand[d] = a.demand_min[d] < a.demand_max[d] ? u(rng_) : a.demand_min[d];
    }
    std::uniform_int_distribution<Tick> dur(a.duration_min, a.duration_max);
    admit_application(demand, dur(rng_));
  }
}

void Simulator::admit_application(const ResourceVector& demand, Tick duration) {
  const AppId app_id{next_app_++};
  const UserId user{next_user_++};
  auto reject = [&] {
    actions_.push_back(Action{now_, ActionKind::reject, app_id.value, std::nullopt, std::nullopt,
                              ActionReason::admission});
    ++metrics_.admissions_rejected;
    ++metrics_.sla_violations;
  };

  Application app;
  app.id = app_id;
  app.user = user;
  app.arrival_time = now_;
  app.tasks = split_application(
      app_id, demand, duration,
      SplitPolicy{config_.arrivals.fan_out, config_.arrivals.max_fan_out});

  std::vector<Vm> vms;
  try {
    for (const Task& t : app.tasks) vms.push_back(provision_vm(t, catalogue_));
  } catch (const Error& e) {
    if (e.code() != Errc::unsatisfiable_task) throw;
    reject();
    return;
  }

  // All-or-nothing placement, planned on a load view first.
  LoadView view = LoadView::build(state_, nullptr);
  std::vector<Placement> placements;
  for (const Vm& vm : vms) {
    const auto p = choose_placement(view, vm.capacity, PlacementOptions{}, catalogue_);
    if (!p) {
      reject();
      return;
    }
    if (p->requires_power_on) view.set_active(p->server, true);
    view.add(p->server, vm.capacity, vm.capacity);
    placements.push_back(*p);
  }

  for (std::size_t i = 0; i < vms.size(); ++i) {
    const Placement& p = placements[i];
    if (p.requires_power_on && !state_.server(p.server).active()) {
      state_.power_on(p.server);
      actions_.push_back(Action{now_, ActionKind::power_on, p.server.value, std::nullopt,
                                std::nullopt, ActionReason::placement});
    }
    vms[i].owner_user = user;
    const VmId id = state_.admit_vm(std::move(vms[i]), p.server);
    app.tasks[i].assigned_vm = id;
    app.tasks[i].started_at = now_;
    avad_.register_vm(id, app_id);
  }
  ++metrics_.applications_admitted;
  state_.applications().emplace(app_id, std::move(app));
}

void Simulator::generate_usage_and_links() {
  const auto& u = config_.usage;
  std::uniform_real_distribution<double> phase_dist(0.0, static_cast<double>(u.period));
  std::normal_distribution<double> noise(0.0, 1.0);
  while (phase_.size() < state_.vms().size()) phase_.push_back(phase_dist(rng_));

  for (const Vm& vm : state_.vms()) {
    if (!vm.active()) continue;
    const double wave = u.base + u.amplitude * std::sin(2.0 * std::numbers::pi *
                                                        (static_cast<double>(now_) + phase_[vm.id.value]) /
                                                        static_cast<double>(u.period));
    UsageRecord rec{now_, vm.id, vm.host_server, {}};
    for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
      const double fraction = std::clamp(wave + u.noise_stddev * noise(rng_), 0.0, 1.0);
      rec.usage[d] = fraction * vm.capacity[d];
    }
    store_.record(rec);
  }

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<VmId> members;
  for (const auto& [id, app] : state_.applications()) {
    members.clear();
    for (const Task& t : app.tasks) {
      if (t.assigned_vm && state_.vm(*t.assigned_vm).active()) members.push_back(*t.assigned_vm);
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        if (coin(rng_) < config_.link_probability) {
          observe_link(cval_, members[i], members[j], now_, state_);
        }
      }
    }
  }

  for (const BreachAttempt& attempt : attempts_) {
    for (const Link& link : attempt.links) {
      if (state_.vm(link.first()).active() && state_.vm(link.second()).active()) {
        cval_.observe(link, now_);
      }
    }
  }
}

void Simulator::maybe_inject_attack() {
  const auto& attack = config_.attack;
  if (attack.scenario == AttackScenario::none || attack_injected_ || now_ < attack.launch_time) return;

  if (attack.masquerade && !masquerade_app_) masquerade_app_ = AppId{next_app_++};
  const VmFlavor flavor = attack.flavor.empty() ? catalogue_.flavors().front()
                                                : *catalogue_.find(attack.flavor);
  AttackContext ctx{state_, cval_, avad_, rng_, catalogue_, flavor, now_, config_.breach_dwell_time,
                    masquerade_app_};
  AttackInjection injection;
  try {
    switch (attack.scenario) {
      case AttackScenario::co_residency: injection = inject_co_residency(ctx); break;
      case AttackScenario::multi_hijack: injection = inject_multi_hijack(ctx, attack.count); break;
      case AttackScenario::grouped_cascade:
        injection = inject_grouped_cascade(ctx, attack.chain_length);
        break;
      case AttackScenario::none: return;
    }
  } catch (const Error& e) {
    if (e.code() != Errc::injection_infeasible) throw;
    // Retry on the next tick once the datacenter has changed.
    ++metrics_.injection_warnings;
    return;
  }
  attack_injected_ = true;
  metrics_.injection_warnings += injection.warnings;
  attackers_.insert(injection.attackers.begin(), injection.attackers.end());
  metrics_.attacks_established += injection.attempts.size();
  attempts_.insert(attempts_.end(), injection.attempts.begin(), injection.attempts.end());
  log(injection.actions);

  std::uniform_real_distribution<double> phase_dist(0.0, static_cast<double>(config_.usage.period));
  while (phase_.size() < state_.vms().size()) phase_.push_back(phase_dist(rng_));
}

void Simulator::security_and_management() {
  const bool audited = config_.audit_enabled && now_ % config_.audit_interval == 0;
  const bool manage = now_ % config_.management_interval == 0;
  SecurityVerdict verdict;
  verdict.issued_at = now_;
  if (audited) verdict = audit(cval_, avad_, now_, config_.audit_interval, config_.policy);
  if (!manage && verdict.empty()) {
    if (audited) audits_.push_back(AuditRecord{now_, {}, {}, config_.policy});
    return;
  }

  ForecastMap forecasts;
  if (manage) {
    std::vector<VmId> active;
    for (const Vm& vm : state_.vms()) {
      if (vm.active()) active.push_back(vm.id);
    }
    analyzer_.retrain_due(store_, active, now_);
    for (VmId id : active) {
      forecasts.emplace(id, analyzer_.forecast(store_, id, state_.vm(id).capacity));
    }
  }

  CycleOutcome out = management_cycle(state_, manage ? &forecasts : nullptr, verdict, cval_,
                                      catalogue_, manager_config_, now_);
  for (VmId vm : out.terminated) {
    ++metrics_.terminations;
    if (!attackers_.contains(vm)) ++metrics_.false_positive_terminations;
    avad_.unregister_vm(vm);
    analyzer_.forget(vm);
  }
  metrics_.sla_violations += out.failed_applications.size() + out.overload_unresolved;
  metrics_.overload_unresolved += out.overload_unresolved;
  metrics_.migrations += out.migrations;
  metrics_.energy += static_cast<double>(out.migrations) * config_.energy.migration_cost;
  log(out.actions);

  if (audited) {
    audits_.push_back(AuditRecord{
        now_,
        std::vector<Link>(verdict.unauthorized_links.begin(), verdict.unauthorized_links.end()),
        out.terminated, config_.policy});
  }
}

void Simulator::resolve_attempts() {
  for (BreachAttempt& attempt : attempts_) {
    if (attempt.outcome != BreachOutcome::pending) continue;
    switch (resolve_attempt(attempt, state_, now_)) {
      case BreachOutcome::prevented: ++metrics_.breaches_prevented; break;
      case BreachOutcome::succeeded: ++metrics_.breaches_succeeded; break;
      case BreachOutcome::pending: break;
    }
  }
}

void Simulator::account_tick() {
  metrics_.energy += account_energy(state_, config_.energy);
  const std::uint64_t active = state_.active_server_count();
  metrics_.active_server_ticks += active;

  if (config_.check_invariants) {
    const InvariantReport report = state_.check_invariants();
    metrics_.capacity_violations += report.capacity_violations;
    metrics_.zombie_vms += report.zombie_vms;
    metrics_.placement_violations += report.placement_violations + report.off_servers_hosting;
    const std::size_t accounted = state_.count_vms(VmState::active) +
                                  state_.count_vms(VmState::terminated) +
                                  state_.count_vms(VmState::migrating);
    if (accounted != state_.created_vms()) ++metrics_.conservation_violations;
  }

  ticks_.push_back(TickRow{now_, metrics_.energy, active, metrics_.migrations, metrics_.terminations,
                           metrics_.breaches_prevented, metrics_.breaches_succeeded});
}

RunResult run(const ScenarioConfig& config) {
  Simulator sim(config);
  return sim.run();
}

}  // namespace vmshield
