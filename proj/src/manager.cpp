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
#include "vmshield/manager.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vmshield/error.hpp"

namespace vmshield {

namespace {

ActionReason action_reason(PlanReason reason) {
  switch (reason) {
    case PlanReason::overload: return ActionReason::overload;
    case PlanReason::underload: return ActionReason::underload;
    case PlanReason::security: return ActionReason::relocation;
  }
  return ActionReason::placement;
}

ResourceVector forecast_or_capacity(const ForecastMap& forecasts, const Vm& vm) {
  auto it = forecasts.find(vm.id);
  return it == forecasts.end() ? vm.capacity : it->second;
}

/// Hosted VMs ordered largest first by size key, lowest id on ties.
std::vector<const Vm*> largest_first(const Server& server, const DatacenterState& state,
                                     const FlavorCatalogue& catalogue) {
  std::vector<const Vm*> vms;
  for (VmId id : server.hosted_vm_ids) vms.push_back(&state.vm(id));
  std::stable_sort(vms.begin(), vms.end(), [&](const Vm* a, const Vm* b) {
    return catalogue.size_key(a->capacity) > catalogue.size_key(b->capacity);
  });
  return vms;
}

}  // namespace

// ------------------------------------------------------------- flavors

FlavorCatalogue::FlavorCatalogue(std::vector<VmFlavor> flavors) : flavors_(std::move(flavors)) {
  if (flavors_.empty()) throw Error(Errc::configuration, "flavor catalogue is empty");
  for (const VmFlavor& f : flavors_) {
    if (!rv_valid(f.capacity)) {
      throw Error(Errc::configuration, "flavor '" + f.name + "' has an invalid capacity");
    }
    for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
      reference_[d] = std::max(reference_[d], f.capacity[d]);
    }
  }
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
    if (!(reference_[d] > 0.0)) {
      throw Error(Errc::configuration,
                  "flavor catalogue has no " + std::string(kDimensionNames[d]) + " capacity");
    }
  }
  std::stable_sort(flavors_.begin(), flavors_.end(), [&](const VmFlavor& a, const VmFlavor& b) {
    return size_key(a.capacity) < size_key(b.capacity);
  });
  for (std::size_t i = 1; i < flavors_.size(); ++i) {
    if (!(size_key(flavors_[i - 1].capacity) < size_key(flavors_[i].capacity))) {
      throw Error(Errc::configuration, "flavors '" + flavors_[i - 1].name + "' and '" +
                                           flavors_[i].name + "' have the same size");
    }
  }
}

double FlavorCatalogue::size_key(const ResourceVector& v) const {
  double acc = 0.0;
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) acc += v[d] / reference_[d];
  return acc / ResourceVector::kDims;
}

const VmFlavor* FlavorCatalogue::find(const std::string& name) const {
  auto it = std::find_if(flavors_.begin(), flavors_.end(),
                         [&](const VmFlavor& f) { return f.name == name; });
  return it == flavors_.end() ? nullptr : &*it;
}

// ------------------------------------------------------------ tasks/VMs

std::vector<Task> split_application(AppId app, const ResourceVector& total_demand, Tick task_duration,
                                    const SplitPolicy& policy) {
  if (!rv_valid(total_demand) || !(rv_max_component(total_demand) > 0.0)) {
    throw Error(Errc::precondition, "application demand must be positive");
  }
  if (policy.fan_out == 0 || policy.fan_out > policy.max_fan_out) {
    std::ostringstream msg;
    msg << "fan-out " << policy.fan_out << " outside [1, " << policy.max_fan_out << "]";
    throw Error(Errc::policy, msg.str());
  }
  if (task_duration <= 0) throw Error(Errc::precondition, "task duration must be > 0");
  const ResourceVector share = rv_scale(total_demand, 1.0 / static_cast<double>(policy.fan_out));
  std::vector<Task> tasks;
  tasks.reserve(policy.fan_out);
  for (std::size_t i = 0; i < policy.fan_out; ++i) {
    Task t;
    t.id = TaskId{static_cast<std::uint32_t>(i)};
    t.application = app;
    t.demand = share;
    t.duration = task_duration;
    tasks.push_back(t);
  }
  return tasks;
}

Vm provision_vm(const Task& task, const FlavorCatalogue& catalogue) {
  for (const VmFlavor& f : catalogue.flavors()) {
    if (rv_fits(task.demand, f.capacity)) {
      Vm vm;
      vm.capacity = f.capacity;
      vm.flavor = f.name;
      vm.application_id = task.application;
      return vm;
    }
  }
  std::ostringstream msg;
  msg << "no flavor fits task demand " << task.demand;
  throw Error(Errc::unsatisfiable_task, msg.str());
}

// ------------------------------------------------------------ placement

LoadView LoadView::build(const DatacenterState& state, const ForecastMap* forecasts) {
  LoadView view;
  view.servers_.reserve(state.servers().size());
  for (const Server& s : state.servers()) {
    ServerLoad load{s.id, s.capacity, state.reserved(s.id), {}, s.active()};
    load.predicted = forecasts ? predict_server(*forecasts, s) : load.reserved;
    view.servers_.push_back(load);
  }
  return view;
}

void LoadView::add(ServerId id, const ResourceVector& capacity, const ResourceVector& forecast) {
  ServerLoad& s = servers_.at(id.value);
  s.reserved += capacity;
  s.predicted += forecast;
}

void LoadView::remove(ServerId id, const ResourceVector& capacity, const ResourceVector& forecast) {
  ServerLoad& s = servers_.at(id.value);
  s.reserved -= capacity;
  s.predicted -= forecast;
}

std::optional<Placement> choose_placement(const LoadView& view, const ResourceVector& capacity,
                                          const PlacementOptions& options,
                                          const FlavorCatalogue& catalogue) {
  auto forecast_ok = [&](const ServerLoad& s) {
    if (!options.forecast) return true;
    return rv_fits(s.predicted + *options.forecast, rv_scale(s.capacity, options.overload_margin));
  };

  std::optional<Placement> best;
  double best_score = 0.0;
  for (const ServerLoad& s : view.servers()) {
    if (!s.active || options.excluded.contains(s.id)) continue;
    const ResourceVector left = s.capacity - s.reserved;
    if (!rv_fits(capacity, left) || !forecast_ok(s)) continue;
    const double score = catalogue.size_key(left - capacity);
    if (!best || score < best_score) {
      best = Placement{s.id, false};
      best_score = score;
    }
  }
  if (best || !options.allow_power_on) return best;

  for (const ServerLoad& s : view.servers()) {
    if (s.active || options.excluded.contains(s.id)) continue;
    if (!rv_fits(capacity, s.capacity - s.reserved) || !forecast_ok(s)) continue;
    const double score = catalogue.size_key(s.capacity);
    if (!best || score < best_score) {
      best = Placement{s.id, true};
      best_score = score;
    }
  }
  return best;
}

Placement place_vm(const Vm& vm, const DatacenterState& state, const FlavorCatalogue& catalogue) {
  const LoadView view = LoadView::build(state, nullptr);
  if (auto p = choose_placement(view, vm.capacity, PlacementOptions{}, catalogue)) return *p;
  std::ostringstream msg;
  msg << "no server can host a VM of capacity " << vm.capacity;
  throw Error(Errc::admission_rejected, msg.str());
}

// ------------------------------------------------------- over/underload

bool is_overloaded(const ResourceVector& forecast, const ResourceVector& capacity, double margin) {
  return !rv_fits(forecast, rv_scale(capacity, margin));
}

bool is_underloaded(const ResourceVector& forecast, const ResourceVector& capacity, double threshold) {
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
    if (capacity[d] <= 0.0) continue;
    if (!(forecast[d] / capacity[d] < threshold)) return false;
  }
  return true;
}

MigrationPlan handle_overload(ServerId server, const ResourceVector& forecast,
                              const ForecastMap& vm_forecasts, const DatacenterState& state,
                              const FlavorCatalogue& catalogue, LoadView& view,
                              double overload_margin) {
  const Server& src = state.server(server);
  if (!is_overloaded(forecast, src.capacity, overload_margin)) {
    throw Error(Errc::precondition, "handle_overload called on a server that is not overloaded");
  }
  MigrationPlan plan;
  plan.reason = PlanReason::overload;
  ResourceVector left = forecast;
  for (const Vm* vm : largest_first(src, state, catalogue)) {
    if (!is_overloaded(left, src.capacity, overload_margin)) break;
    const ResourceVector f = forecast_or_capacity(vm_forecasts, *vm);
    PlacementOptions opts;
    opts.excluded = {server};
    opts.forecast = f;
    opts.overload_margin = overload_margin;
    const auto target = choose_placement(view, vm->capacity, opts, catalogue);
    if (!target) continue;
    if (target->requires_power_on) {
      plan.power_ons.push_back(target->server);
      view.set_active(target->server, true);
    }
    view.remove(server, vm->capacity, f);
    view.add(target->server, vm->capacity, f);
    plan.moves.push_back(Move{vm->id, server, target->server});
    left -= f;
  }
  plan.unresolved = is_overloaded(left, src.capacity, overload_margin);
  return plan;
}

MigrationPlan handle_overload(ServerId server, const ResourceVector& forecast,
                              const ForecastMap& vm_forecasts, const DatacenterState& state,
                              const FlavorCatalogue& catalogue, double overload_margin) {
  LoadView view = LoadView::build(state, &vm_forecasts);
  return handle_overload(server, forecast, vm_forecasts, state, catalogue, view, overload_margin);
}

MigrationPlan handle_underload(ServerId server, const ResourceVector& forecast, double threshold,
                               const ForecastMap& vm_forecasts, const DatacenterState& state,
                               const FlavorCatalogue& catalogue, LoadView& view,
                               double overload_margin) {
  const Server& src = state.server(server);
  if (!src.active()) throw Error(Errc::precondition, "handle_underload needs an active server");
  if (!is_underloaded(forecast, src.capacity, threshold)) {
    throw Error(Errc::precondition, "handle_underload called on a server that is not underloaded");
  }
  MigrationPlan plan;
  plan.reason = PlanReason::underload;
  LoadView scratch = view;
  for (const Vm* vm : largest_first(src, state, catalogue)) {
    const ResourceVector f = forecast_or_capacity(vm_forecasts, *vm);
    PlacementOptions opts;
    opts.excluded = {server};
    opts.allow_power_on = false;
    opts.forecast = f;
    opts.overload_margin = overload_margin;
    const auto target = choose_placement(scratch, vm->capacity, opts, catalogue);
    if (!target) return MigrationPlan{{}, {}, {}, PlanReason::underload, false};
    scratch.remove(server, vm->capacity, f);
    scratch.add(target->server, vm->capacity, f);
    plan.moves.push_back(Move{vm->id, server, target->server});
  }
  scratch.set_active(server, false);
  plan.shutdowns.push_back(server);
  view = std::move(scratch);
  return plan;
}

MigrationPlan handle_underload(ServerId server, const ResourceVector& forecast, double threshold,
                               const ForecastMap& vm_forecasts, const DatacenterState& state,
                               const FlavorCatalogue& catalogue, double overload_margin) {
  LoadView view = LoadView::build(state, &vm_forecasts);
  return handle_underload(server, forecast, threshold, vm_forecasts, state, catalogue, view,
                          overload_margin);
}

std::vector<Action> apply_plan(const MigrationPlan& plan, DatacenterState& state, Tick now) {
  std::vector<Action> actions;
  const ActionReason reason = action_reason(plan.reason);
  for (ServerId id : plan.power_ons) {
    state.power_on(id);
    actions.push_back(Action{now, ActionKind::power_on, id.value, std::nullopt, std::nullopt, reason});
  }
  for (const Move& m : plan.moves) {
    if (!state.vm(m.vm).active()) continue;
    state.migrate_vm(m.vm, m.to);
    actions.push_back(Action{now, ActionKind::migrate, m.vm.value, m.from, m.to, reason});
  }
  for (ServerId id : plan.shutdowns) {
    state.power_off(id);
    actions.push_back(Action{now, ActionKind::power_off, id.value, std::nullopt, std::nullopt, reason});
  }
  return actions;
}

// ---------------------------------------------------------------- cycle

namespace {

void fail_owner(DatacenterState& state, VmId vm_id, Tick now, CycleOutcome& out) {
  const Vm& vm = state.vm(vm_id);
  if (!vm.application_id) return;
  auto it = state.applications().find(*vm.application_id);
  if (it == state.applications().end()) return;
  Application& app = it->second;
  for (Task& task : app.tasks) {
    if (task.assigned_vm == vm_id && !task.finished_at) {
      task.aborted = true;
      task.finished_at = now;
    }
  }
  if (!app.failed) {
    app.failed = true;
    out.failed_applications.push_back(app.id);
  }
}

void relocate_victims(DatacenterState& state, const SecurityVerdict& verdict,
                      const FlavorCatalogue& catalogue, Tick now, CycleOutcome& out) {
  std::set<VmId> victims;
  for (const Link& link : verdict.unauthorized_links) {
    for (VmId end : {link.first(), link.second()}) {
      const Vm& vm = state.vm(end);
      if (vm.active() && vm.application_id) victims.insert(end);
    }
  }
  for (VmId id : victims) {
    const Vm& vm = state.vm(id);
    const ServerId from = vm.host_server;
    PlacementOptions opts;
    opts.excluded = {from};
    const auto target =
        choose_placement(LoadView::build(state, nullptr), vm.capacity, opts, catalogue);
    if (!target) continue;
    MigrationPlan plan;
    plan.reason = PlanReason::security;
    if (target->requires_power_on) plan.power_ons.push_back(target->server);
    plan.moves.push_back(Move{id, from, target->server});
    auto actions = apply_plan(plan, state, now);
    out.actions.insert(out.actions.end(), actions.begin(), actions.end());
    ++out.migrations;
  }
}

}  // namespace

CycleOutcome management_cycle(DatacenterState& state, const ForecastMap* forecasts,
                              const SecurityVerdict& verdict, Cval& cval,
                              const FlavorCatalogue& catalogue, const ManagerConfig& config, Tick now) {
  CycleOutcome out;

  out.actions = apply_verdict(verdict, state, cval, now);
  for (const Action& a : out.actions) {
    const VmId vm{a.subject};
    out.terminated.push_back(vm);
    fail_owner(state, vm, now, out);
  }
  if (config.relocate_victims && !verdict.empty()) {
    relocate_victims(state, verdict, catalogue, now, out);
  }
  if (!forecasts) return out;

  LoadView view = LoadView::build(state, forecasts);
  auto run_plan = [&](const MigrationPlan& plan) {
    auto actions = apply_plan(plan, state, now);
    out.migrations += plan.moves.size();
    out.actions.insert(out.actions.end(), actions.begin(), actions.end());
  };

  for (const Server& s : state.servers()) {
    if (!s.active()) continue;
    const ResourceVector predicted = view.at(s.id).predicted;
    if (!is_overloaded(predicted, s.capacity, config.overload_margin)) continue;
    const MigrationPlan plan =
        handle_overload(s.id, predicted, *forecasts, state, catalogue, view, config.overload_margin);
    if (plan.unresolved) ++out.overload_unresolved;
    run_plan(plan);
  }

  if (!config.consolidation) return out;

  auto peak_ratio = [](const ServerLoad& s) {
    double r = 0.0;
    for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
      if (s.capacity[d] > 0.0) r = std::max(r, s.predicted[d] / s.capacity[d]);
    }
    return r;
  };
  std::vector<ServerLoad> candidates;
  for (const ServerLoad& s : view.servers()) {
    if (s.active && is_underloaded(s.predicted, s.capacity, config.underload_threshold)) {
      candidates.push_back(s);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](const ServerLoad& a, const ServerLoad& b) {
    return peak_ratio(a) < peak_ratio(b);
  });
  for (const ServerLoad& c : candidates) {
    const ServerLoad current = view.at(c.id);
    if (!current.active ||
        !is_underloaded(current.predicted, current.capacity, config.underload_threshold)) {
      continue;
    }
    const MigrationPlan plan =
        handle_underload(c.id, current.predicted, config.underload_threshold, *forecasts, state,
                         catalogue, view, config.overload_margin);
    if (!plan.empty()) run_plan(plan);
  }
  return out;
}

CompletionEvent integrate_results(Application& app, Tick now) {
  Tick completion = app.arrival_time;
  for (const Task& task : app.tasks) {
    if (!task.finished_at || *task.finished_at > now) {
      std::ostringstream msg;
      msg << "application " << app.id << " has unfinished task " << task.id;
      throw Error(Errc::precondition, msg.str());
    }
    completion = std::max(completion, *task.finished_at);
  }
  app.completion_time = completion;
  return CompletionEvent{app.id, completion, app.failed};
}

}  // namespace vmshield
