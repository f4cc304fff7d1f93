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

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vmshield/scenario.hpp"

namespace vmshield {

enum ExitCode : int { kExitOk = 0, kExitInvalid = 2, kExitIo = 3 };

/// Sets one numeric scenario parameter by name, e.g. "audit_interval" or
/// "breach_dwell_time". Throws Errc::validation for unknown names or values.
void set_parameter(ScenarioConfig& config, std::string_view name, std::string_view value);

/// Names accepted by set_parameter.
std::vector<std::string> sweepable_parameters();

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vmshield
