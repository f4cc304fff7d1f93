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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "vmshield/manager.hpp"
#include "vmshield/model.hpp"
#include "vmshield/scenario.hpp"

namespace fixtures {

using namespace vmshield;

inline ResourceVector rv(double c, double m, double d, double b) { return {c, m, d, b}; }

inline Vm vm_of(const ResourceVector& capacity, std::optional<AppId> app = std::nullopt) {
  Vm vm;
  vm.capacity = capacity;
  vm.application_id = app;
  return vm;
}

/// Uniform flavors S=(2,2,2,2), M=(4,4,4,4), L=(8,8,8,8).
inline FlavorCatalogue uniform_catalogue() {
  return FlavorCatalogue({{"S", ResourceVector::uniform(2)},
                          {"M", ResourceVector::uniform(4)},
                          {"L", ResourceVector::uniform(8)}});
}

/// A datacenter small enough to reason about by hand.
inline ScenarioConfig small_scenario() {
  ScenarioConfig c;
  c.seed = 11;
  c.duration = 120;
  c.servers = {{8, ResourceVector::uniform(16), false}};
  c.flavors = {{"S", ResourceVector::uniform(2)},
               {"M", ResourceVector::uniform(4)},
               {"L", ResourceVector::uniform(8)}};
  c.arrivals.rate = 0.3;
  c.arrivals.fan_out = 2;
  c.arrivals.demand_min = ResourceVector::uniform(1);
  c.arrivals.demand_max = ResourceVector::uniform(8);
  c.arrivals.duration_min = 20;
  c.arrivals.duration_max = 60;
  c.management_interval = 6;
  c.predictor.lags = 4;
  c.predictor.epochs = 50;
  c.predictor.retrain_every = 12;
  c.predictor.retention = 24;
  c.attack.launch_time = 40;
  return c;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vmshield-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
