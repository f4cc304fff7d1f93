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
#include <gtest/gtest.h>

#include <functional>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vmshield/error.hpp"
#include "vmshield/manager.hpp"

namespace vmshield {
namespace {

using fixtures::uniform_catalogue;
using fixtures::vm_of;

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::io;
}

TEST(FlavorCatalogue, SortsBySizeKey) {
  const FlavorCatalogue c({{"L", ResourceVector::uniform(8)},
                           {"S", ResourceVector::uniform(2)},
                           {"M", ResourceVector::uniform(4)}});
  ASSERT_EQ(c.flavors().size(), 3u);
  EXPECT_EQ(c.flavors()[0].name, "S");
  EXPECT_EQ(c.flavors()[2].name, "L");
  EXPECT_EQ(c.reference(), ResourceVector::uniform(8));
  EXPECT_DOUBLE_EQ(c.size_key(ResourceVector::uniform(4)), 0.5);
  EXPECT_DOUBLE_EQ(c.size_key({8, 0, 0, 0}), oracle::size_key({8, 0, 0, 0}, c.reference()));
  ASSERT_NE(c.find("M"), nullptr);
  EXPECT_EQ(c.find("XL"), nullptr);
}

TEST(FlavorCatalogue, RejectsTiesEmptyAndInvalid) {
  EXPECT_EQ(code_of([] {
              FlavorCatalogue({{"a", {2, 1, 1, 1}}, {"b", {1, 2, 1, 1}}});
            }),
            Errc::configuration);
  EXPECT_EQ(code_of([] { FlavorCatalogue({}); }), Errc::configuration);
  EXPECT_EQ(code_of([] { FlavorCatalogue({{"a", {-1, 1, 1, 1}}}); }), Errc::configuration);
}

TEST(SplitApplication, EqualPartition) {
  const auto tasks = split_application(AppId{3}, ResourceVector::uniform(8), 10, {4, 16});
  ASSERT_EQ(tasks.size(), 4u);
  for (const Task& t : tasks) {
    EXPECT_EQ(t.demand, ResourceVector::uniform(2));
    EXPECT_EQ(t.application, AppId{3});
    EXPECT_EQ(t.duration, 10);
    EXPECT_FALSE(t.assigned_vm);
  }
}

TEST(SplitApplication, IdentitySplit) {
  const auto tasks = split_application(AppId{0}, {1, 2, 3, 4}, 5, {1, 16});
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0].demand, (ResourceVector{1, 2, 3, 4}));
}

TEST(SplitApplication, FractionalShares) {
  const auto tasks = split_application(AppId{0}, ResourceVector::uniform(3), 5, {2, 16});
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[1].demand, ResourceVector::uniform(1.5));
}

TEST(SplitApplication, PolicyAndPreconditionErrors) {
  EXPECT_EQ(code_of([] { split_application(AppId{0}, ResourceVector::uniform(8), 5, {17, 16}); }),
            Errc::policy);
  EXPECT_EQ(code_of([] { split_application(AppId{0}, ResourceVector::uniform(8), 5, {0, 16}); }),
            Errc::policy);
  EXPECT_EQ(code_of([] { split_application(AppId{0}, ResourceVector{}, 5, {1, 16}); }),
            Errc::precondition);
  EXPECT_EQ(code_of([] { split_application(AppId{0}, ResourceVector::uniform(1), 0, {1, 16}); }),
            Errc::precondition);
}

TEST(ProvisionVm, SmallestFit) {
  const FlavorCatalogue c({{"S", ResourceVector::uniform(2)}, {"L", ResourceVector::uniform(8)}});
  Task t;
  t.application = AppId{5};
  t.demand = ResourceVector::uniform(1);
  const Vm vm = provision_vm(t, c);
  EXPECT_EQ(vm.flavor, "S");
  EXPECT_EQ(vm.capacity, ResourceVector::uniform(2));
  EXPECT_EQ(vm.application_id, AppId{5});
}

TEST(ProvisionVm, NoFitIsUnsatisfiable) {
  const FlavorCatalogue c({{"S", ResourceVector::uniform(2)}, {"L", ResourceVector::uniform(8)}});
  Task t;
  t.demand = {9, 1, 1, 1};
  EXPECT_EQ(code_of([&] { provision_vm(t, c); }), Errc::unsatisfiable_task);
}

TEST(ProvisionVm, BoundaryFit) {
  const FlavorCatalogue c({{"S", ResourceVector::uniform(2)}, {"L", ResourceVector::uniform(8)}});
  Task t;
  t.demand = ResourceVector::uniform(2);
  EXPECT_EQ(provision_vm(t, c).flavor, "S");
}

TEST(PlaceVm, TightestFit) {
  DatacenterState state;
  const ServerId a = state.add_server(ResourceVector::uniform(10), PowerState::active);
  const ServerId b = state.add_server(ResourceVector::uniform(10), PowerState::active);
  state.admit_vm(vm_of(ResourceVector::uniform(2)), a);  // a has 8 left
  state.admit_vm(vm_of(ResourceVector::uniform(8)), b);  // b has 2 left
  const Placement p = place_vm(vm_of(ResourceVector::uniform(2)), state, uniform_catalogue());
  EXPECT_EQ(p, (Placement{b, false}));
}

TEST(PlaceVm, TieGoesToLowestId) {
  DatacenterState state;
  const ServerId a = state.add_server(ResourceVector::uniform(10), PowerState::active);
  state.add_server(ResourceVector::uniform(10), PowerState::active);
  EXPECT_EQ(place_vm(vm_of(ResourceVector::uniform(2)), state, uniform_catalogue()).server, a);
}

TEST(PlaceVm, PowersOnSmallestOffServerWhenActiveAreFull) {
  DatacenterState state;
  const ServerId a = state.add_server(ResourceVector::uniform(4), PowerState::active);
  state.add_server(ResourceVector::uniform(32));
  const ServerId small = state.add_server(ResourceVector::uniform(8));
  state.admit_vm(vm_of(ResourceVector::uniform(4)), a);
  EXPECT_EQ(place_vm(vm_of(ResourceVector::uniform(4)), state, uniform_catalogue()),
            (Placement{small, true}));
}

TEST(PlaceVm, NothingFitsIsRejected) {
  DatacenterState state;
  state.add_server(ResourceVector::uniform(4), PowerState::active);
  state.add_server(ResourceVector::uniform(4));
  EXPECT_EQ(code_of([&] { place_vm(vm_of(ResourceVector::uniform(8)), state, uniform_catalogue()); }),
            Errc::admission_rejected);
}

// Server 0 (cpu 10) hosts v0 (largest), v1, v2; server 1 is empty.
struct OverloadCase {
  DatacenterState state;
  ForecastMap forecasts;
  OverloadCase() {
    const ServerId s0 = state.add_server(ResourceVector::uniform(10), PowerState::active);
    state.add_server(ResourceVector::uniform(10), PowerState::active);
    state.admit_vm(vm_of({4, 4, 4, 4}), s0);
    state.admit_vm(vm_of({3, 3, 3, 3}), s0);
    state.admit_vm(vm_of({2, 2, 2, 2}), s0);
    forecasts = {{VmId{0}, {6, 1, 1, 1}}, {VmId{1}, {4, 1, 1, 1}}, {VmId{2}, {2, 1, 1, 1}}};
  }
};

TEST(HandleOverload, MigratesTheLargestPrefixOnly) {
  OverloadCase c;
  const ResourceVector predicted = predict_server(c.forecasts, c.state.server(ServerId{0}));
  ASSERT_EQ(predicted.cpu, 12);
  const MigrationPlan plan =
      handle_overload(ServerId{0}, predicted, c.forecasts, c.state, uniform_catalogue());
  ASSERT_EQ(plan.moves.size(), 1u);
  EXPECT_EQ(plan.moves[0], (Move{VmId{0}, ServerId{0}, ServerId{1}}));
  EXPECT_FALSE(plan.unresolved);
  EXPECT_EQ(plan.reason, PlanReason::overload);

  // Independent oracle: shortest size-ordered prefix that restores feasibility.
  std::vector<oracle::SizedVm> sized;
  for (VmId id : c.state.server(ServerId{0}).hosted_vm_ids) {
    sized.push_back({id, oracle::size_key(c.state.vm(id).capacity, ResourceVector::uniform(8)),
                     c.forecasts.at(id)});
  }
  const auto expected = oracle::shortest_feasible_prefix(sized, ResourceVector::uniform(10), 1.0);
  ASSERT_TRUE(expected);
  EXPECT_EQ(*expected, (std::vector<VmId>{VmId{0}}));

  const auto actions = apply_plan(plan, c.state, 3);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].kind, ActionKind::migrate);
  EXPECT_EQ(actions[0].reason, ActionReason::overload);
  EXPECT_TRUE(c.state.check_invariants().ok());
}

TEST(HandleOverload, NotOverloadedIsAPreconditionViolation) {
  OverloadCase c;
  EXPECT_EQ(code_of([&] {
              handle_overload(ServerId{0}, ResourceVector::uniform(9), c.forecasts, c.state,
                              uniform_catalogue());
            }),
            Errc::precondition);
}

TEST(HandleOverload, NoTargetLeavesItUnresolved) {
  DatacenterState state;
  const ServerId s0 = state.add_server(ResourceVector::uniform(8), PowerState::active);
  state.add_server(ResourceVector::uniform(4));
  state.admit_vm(vm_of(ResourceVector::uniform(8)), s0);
  const ForecastMap f{{VmId{0}, ResourceVector::uniform(9)}};
  const MigrationPlan plan =
      handle_overload(s0, ResourceVector::uniform(9), f, state, uniform_catalogue());
  EXPECT_TRUE(plan.moves.empty());
  EXPECT_TRUE(plan.unresolved);
}

TEST(HandleOverload, CanPowerOnATarget) {
  DatacenterState state;
  const ServerId s0 = state.add_server(ResourceVector::uniform(8), PowerState::active);
  const ServerId off = state.add_server(ResourceVector::uniform(8));
  state.admit_vm(vm_of(ResourceVector::uniform(4)), s0);
  state.admit_vm(vm_of(ResourceVector::uniform(2)), s0);
  const ForecastMap f{{VmId{0}, ResourceVector::uniform(4)}, {VmId{1}, ResourceVector::uniform(2)}};
  const MigrationPlan plan =
      handle_overload(s0, ResourceVector::uniform(6), f, state, uniform_catalogue(), 0.5);
  ASSERT_EQ(plan.moves.size(), 1u);
  EXPECT_EQ(plan.power_ons, (std::vector<ServerId>{off}));
  apply_plan(plan, state, 1);
  EXPECT_TRUE(state.server(off).active());
  EXPECT_EQ(state.vm(VmId{0}).host_server, off);
}

struct UnderloadCase {
  DatacenterState state;
  ForecastMap forecasts;
  UnderloadCase() {
    const ServerId s0 = state.add_server(ResourceVector::uniform(20), PowerState::active);
    const ServerId s1 = state.add_server(ResourceVector::uniform(20), PowerState::active);
    state.add_server(ResourceVector::uniform(20));
    state.admit_vm(vm_of(ResourceVector::uniform(2)), s0);
    state.admit_vm(vm_of(ResourceVector::uniform(2)), s0);
    state.admit_vm(vm_of(ResourceVector::uniform(8)), s1);
    forecasts = {{VmId{0}, ResourceVector::uniform(1)},
                 {VmId{1}, ResourceVector::uniform(1)},
                 {VmId{2}, ResourceVector::uniform(6)}};
  }
};

TEST(HandleUnderload, FullConsolidation) {
  UnderloadCase c;
  const MigrationPlan plan = handle_underload(ServerId{0}, ResourceVector::uniform(2), 0.2,
                                              c.forecasts, c.state, uniform_catalogue());
  ASSERT_EQ(plan.moves.size(), 2u);
  for (const Move& m : plan.moves) EXPECT_EQ(m.to, ServerId{1});
  EXPECT_EQ(plan.shutdowns, (std::vector<ServerId>{ServerId{0}}));
  EXPECT_TRUE(plan.power_ons.empty());
  apply_plan(plan, c.state, 1);
  EXPECT_FALSE(c.state.server(ServerId{0}).active());
  EXPECT_TRUE(c.state.check_invariants().ok());
}

TEST(HandleUnderload, AllOrNothing) {
  UnderloadCase c;
  // Fill server 1 so only one of the two VMs could move; off servers are not used.
  c.state.admit_vm(vm_of(ResourceVector::uniform(8)), ServerId{1});
  c.state.admit_vm(vm_of(ResourceVector::uniform(2)), ServerId{1});
  c.forecasts[VmId{3}] = ResourceVector::uniform(1);
  c.forecasts[VmId{4}] = ResourceVector::uniform(1);
  const MigrationPlan plan = handle_underload(ServerId{0}, ResourceVector::uniform(2), 0.2,
                                              c.forecasts, c.state, uniform_catalogue());
  EXPECT_TRUE(plan.empty());
}

TEST(HandleUnderload, IdleServerShutsDownWithoutMoves) {
  DatacenterState state;
  const ServerId s = state.add_server(ResourceVector::uniform(20), PowerState::active);
  const MigrationPlan plan =
      handle_underload(s, ResourceVector{}, 0.2, {}, state, uniform_catalogue());
  EXPECT_TRUE(plan.moves.empty());
  EXPECT_EQ(plan.shutdowns, (std::vector<ServerId>{s}));
}

TEST(HandleUnderload, Preconditions) {
  UnderloadCase c;
  EXPECT_EQ(code_of([&] {
              handle_underload(ServerId{1}, ResourceVector::uniform(6), 0.2, c.forecasts, c.state,
                               uniform_catalogue());
            }),
            Errc::precondition);
  EXPECT_EQ(code_of([&] {
              handle_underload(ServerId{2}, ResourceVector{}, 0.2, c.forecasts, c.state,
                               uniform_catalogue());
            }),
            Errc::precondition);
}

TEST(Predicates, OverAndUnderload) {
  EXPECT_TRUE(is_overloaded({11, 0, 0, 0}, ResourceVector::uniform(10)));
  EXPECT_FALSE(is_overloaded(ResourceVector::uniform(10), ResourceVector::uniform(10)));
  EXPECT_TRUE(is_overloaded(ResourceVector::uniform(9), ResourceVector::uniform(10), 0.85));
  EXPECT_TRUE(is_underloaded(ResourceVector::uniform(1), ResourceVector::uniform(10), 0.2));
  EXPECT_FALSE(is_underloaded({1, 2, 1, 1}, ResourceVector::uniform(10), 0.2));
}

// Server 0 (16) hosts an attacker (L) and two benign M VMs; server 1 is empty.
struct CycleCase {
  DatacenterState state;
  Cval cval;
  ForecastMap forecasts;
  ManagerConfig config;
  CycleCase() {
    const ServerId s0 = state.add_server(ResourceVector::uniform(16), PowerState::active);
    state.add_server(ResourceVector::uniform(16), PowerState::active);
    state.admit_vm(vm_of(ResourceVector::uniform(8)), s0);                 // attacker
    state.admit_vm(vm_of(ResourceVector::uniform(4), AppId{0}), s0);       // benign
    state.admit_vm(vm_of(ResourceVector::uniform(4), AppId{0}), s0);       // benign
    forecasts = {{VmId{0}, ResourceVector::uniform(8)},
                 {VmId{1}, ResourceVector::uniform(3)},
                 {VmId{2}, ResourceVector::uniform(3)}};
    config.overload_margin = 0.8;
    config.consolidation = false;
  }
  SecurityVerdict attacker_verdict() const {
    SecurityVerdict v;
    v.unauthorized_links = {Link(VmId{0}, VmId{1})};
    v.attacker_vm_ids = {VmId{0}};
    return v;
  }
};

TEST(ManagementCycle, WithoutVerdictTheAttackerWouldMigrate) {
  CycleCase c;
  const auto out = management_cycle(c.state, &c.forecasts, {}, c.cval, uniform_catalogue(),
                                    c.config, 5);
  ASSERT_EQ(out.migrations, 1u);
  EXPECT_EQ(out.actions.back().subject, 0u);
}

TEST(ManagementCycle, TerminationDissolvesOverloadAndDropsTheMigration) {
  CycleCase c;
  // Oracle: recompute the overload predicate once the attacker's load is gone.
  ResourceVector after = predict_server(c.forecasts, c.state.server(ServerId{0})) - c.forecasts.at(VmId{0});
  ASSERT_FALSE(is_overloaded(after, ResourceVector::uniform(16), c.config.overload_margin));

  const auto out = management_cycle(c.state, &c.forecasts, c.attacker_verdict(), c.cval,
                                    uniform_catalogue(), c.config, 5);
  ASSERT_EQ(out.actions.size(), 1u);
  EXPECT_EQ(out.actions[0].kind, ActionKind::terminate);
  EXPECT_EQ(out.migrations, 0u);
  EXPECT_EQ(out.terminated, (std::vector<VmId>{VmId{0}}));
  EXPECT_TRUE(out.failed_applications.empty());
}

TEST(ManagementCycle, SteadyStateIsQuiet) {
  CycleCase c;
  c.forecasts[VmId{0}] = ResourceVector::uniform(4);
  c.config.consolidation = true;
  c.config.underload_threshold = 0.05;
  const auto out = management_cycle(c.state, &c.forecasts, {}, c.cval, uniform_catalogue(),
                                    c.config, 5);
  // Server 1 is empty and below any threshold; only it shuts down.
  ASSERT_EQ(out.actions.size(), 1u);
  EXPECT_EQ(out.actions[0].kind, ActionKind::power_off);
  const auto again = management_cycle(c.state, &c.forecasts, {}, c.cval, uniform_catalogue(),
                                      c.config, 6);
  EXPECT_TRUE(again.actions.empty());
}

TEST(ManagementCycle, BenignCollateralFailsItsApplication) {
  CycleCase c;
  Application app;
  app.id = AppId{0};
  for (std::uint32_t v : {1u, 2u}) {
    Task t;
    t.id = TaskId{v};
    t.application = app.id;
    t.assigned_vm = VmId{v};
    t.started_at = 0;
    app.tasks.push_back(t);
  }
  c.state.applications().emplace(app.id, app);
  SecurityVerdict v;
  v.attacker_vm_ids = {VmId{1}};
  const auto out = management_cycle(c.state, nullptr, v, c.cval, uniform_catalogue(), c.config, 4);
  EXPECT_EQ(out.failed_applications, (std::vector<AppId>{AppId{0}}));
  const Application& stored = c.state.applications().at(AppId{0});
  EXPECT_TRUE(stored.failed);
  EXPECT_TRUE(stored.tasks[0].aborted);
  EXPECT_EQ(stored.tasks[0].finished_at, Tick{4});
  EXPECT_FALSE(stored.tasks[1].finished_at);
}

TEST(ManagementCycle, NoZombiesAfterCycle) {
  CycleCase c;
  c.config.consolidation = true;
  management_cycle(c.state, &c.forecasts, c.attacker_verdict(), c.cval, uniform_catalogue(),
                   c.config, 5);
  EXPECT_EQ(c.state.check_invariants().zombie_vms, 0u);
  EXPECT_TRUE(c.state.check_invariants().ok());
}

TEST(ManagementCycle, RelocatesVictimsWhenAsked) {
  CycleCase c;
  c.config.relocate_victims = true;
  const auto out = management_cycle(c.state, nullptr, c.attacker_verdict(), c.cval,
                                    uniform_catalogue(), c.config, 5);
  EXPECT_EQ(out.migrations, 1u);
  EXPECT_EQ(c.state.vm(VmId{1}).host_server, ServerId{1});
  EXPECT_EQ(out.actions.back().reason, ActionReason::relocation);
}

Application finished_at(std::vector<Tick> ends) {
  Application app;
  for (Tick e : ends) {
    Task t;
    t.finished_at = e;
    app.tasks.push_back(t);
  }
  return app;
}

TEST(IntegrateResults, CompletionIsLatestFinish) {
  Application app = finished_at({4, 6, 5});
  EXPECT_EQ(integrate_results(app, 6).completion_time, 6);
  EXPECT_EQ(app.completion_time, Tick{6});
}

TEST(IntegrateResults, SingleTask) {
  Application app = finished_at({9});
  EXPECT_EQ(integrate_results(app, 9).completion_time, 9);
}

TEST(IntegrateResults, FailedFlagPropagates) {
  Application app = finished_at({3});
  app.failed = true;
  EXPECT_TRUE(integrate_results(app, 3).failed);
}

TEST(IntegrateResults, UnfinishedTaskIsAPreconditionViolation) {
  Application app = finished_at({3});
  app.tasks.push_back(Task{});
  EXPECT_EQ(code_of([&] { integrate_results(app, 5); }), Errc::precondition);
}

}  // namespace
}  // namespace vmshield
