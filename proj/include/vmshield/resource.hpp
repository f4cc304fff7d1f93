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

#include <array>
#include <cstddef>
#include <ostream>
#include <string_view>

namespace vmshield {

/// Quantity over the four managed resource dimensions. Capacities, demands,
/// observed usage and utilization fractions all use this type.
struct ResourceVector {
  static constexpr std::size_t kDims = 4;

  double cpu{};
  double memory{};     // MiB
  double disk{};       // GiB
  double bandwidth{};  // Mbps

  double& operator[](std::size_t dim);
  double operator[](std::size_t dim) const;

  bool operator==(const ResourceVector&) const = default;

  static ResourceVector uniform(double v) { return {v, v, v, v}; }
};

inline constexpr std::array<std::string_view, ResourceVector::kDims> kDimensionNames{
    "cpu", "memory", "disk", "bandwidth"};

/// Slack used when comparing accumulated sums against capacities.
inline constexpr double kFitTolerance = 1e-9;

/// Component-wise sum. Throws Errc::arithmetic if a component overflows.
ResourceVector rv_add(const ResourceVector& a, const ResourceVector& b);
ResourceVector rv_sub(const ResourceVector& a, const ResourceVector& b);
ResourceVector rv_scale(const ResourceVector& a, double factor);

/// True iff `demand` is within `capacity` in every component.
bool rv_fits(const ResourceVector& demand, const ResourceVector& capacity);

/// Finite and non-negative in every component.
bool rv_valid(const ResourceVector& v);

double rv_max_component(const ResourceVector& v);
double rv_mean_component(const ResourceVector& v);
ResourceVector rv_clamp(const ResourceVector& v, const ResourceVector& lo, const ResourceVector& hi);

inline ResourceVector operator+(const ResourceVector& a, const ResourceVector& b) { return rv_add(a, b); }
inline ResourceVector operator-(const ResourceVector& a, const ResourceVector& b) { return rv_sub(a, b); }
inline ResourceVector& operator+=(ResourceVector& a, const ResourceVector& b) { return a = rv_add(a, b); }
inline ResourceVector& operator-=(ResourceVector& a, const ResourceVector& b) { return a = rv_sub(a, b); }

std::ostream& operator<<(std::ostream& os, const ResourceVector& v);

}  // namespace vmshield
