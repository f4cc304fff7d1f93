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

#include <stdexcept>
#include <string>
#include <string_view>

namespace vmshield {

enum class Errc {
  arithmetic,
  configuration,
  model_violation,
  ordering,
  degenerate_series,
  not_enough_history,
  incomplete_forecast,
  stale_link,
  policy,
  unsatisfiable_task,
  admission_rejected,
  precondition,
  injection_infeasible,
  validation,
  io,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the Errc categories so
/// callers (the simulator, the CLI) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace vmshield
