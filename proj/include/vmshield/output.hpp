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
#include <string>

#include "vmshield/simulator.hpp"

#include <json.hpp>

namespace vmshield {

/// Shortest round-trip decimal form, `.` separator regardless of locale.
std::string format_number(double value);

nlohmann::ordered_json metrics_json(const RunResult& result);
std::string ticks_csv(const RunResult& result);
std::string actions_jsonl(const RunResult& result);
std::string audit_jsonl(const RunResult& result);

/// Writes `text` to `path` and throws Errc::io on any failure.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Creates `dir` and writes metrics.json, ticks.csv, actions.jsonl and
/// audit.jsonl. Throws Errc::io.
void write_run_outputs(const std::filesystem::path& dir, const RunResult& result);

}  // namespace vmshield
