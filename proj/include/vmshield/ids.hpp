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

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace vmshield {

/// Simulation time in whole ticks. One tick is one usage sample per VM.
using Tick = std::int64_t;

template <class Tag>
struct Id {
  std::uint32_t value{};

  constexpr auto operator<=>(const Id&) const = default;
};

template <class Tag>
std::ostream& operator<<(std::ostream& os, Id<Tag> id) {
  return os << id.value;
}

using VmId = Id<struct VmTag>;
using ServerId = Id<struct ServerTag>;
using AppId = Id<struct AppTag>;
using UserId = Id<struct UserTag>;
using TaskId = Id<struct TaskTag>;

}  // namespace vmshield

template <class Tag>
struct std::hash<vmshield::Id<Tag>> {
  std::size_t operator()(vmshield::Id<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
