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
#include "vmshield/resource.hpp"

#include <algorithm>
#include <cmath>

#include "vmshield/error.hpp"

namespace vmshield {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::arithmetic: return "arithmetic";
    case Errc::configuration: return "configuration";
    case Errc::model_violation: return "model-violation";
    case Errc::ordering: return "ordering";
    case Errc::degenerate_series: return "degenerate-series";
    case Errc::not_enough_history: return "not-enough-history";
    case Errc::incomplete_forecast: return "incomplete-forecast";
    case Errc::stale_link: return "stale-link";
    case Errc::policy: return "policy";
    case Errc::unsatisfiable_task: return "unsatisfiable-task";
    case Errc::admission_rejected: return "admission-rejected";
    case Errc::precondition: return "precondition";
    case Errc::injection_infeasible: return "injection-infeasible";
    case Errc::validation: return "validation";
    case Errc::io: return "io";
  }
  return "unknown";
}

double& ResourceVector::operator[](std::size_t dim) {
  switch (dim) {
    case 0: return cpu;
    case 1: return memory;
    case 2: return disk;
    case 3: return bandwidth;
  }
  throw Error(Errc::precondition, "resource dimension out of range");
}

double ResourceVector::operator[](std::size_t dim) const {
  return const_cast<ResourceVector&>(*this)[dim];
}

ResourceVector rv_add(const ResourceVector& a, const ResourceVector& b) {
  ResourceVector out;
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
    out[d] = a[d] + b[d];
    if (!std::isfinite(out[d]) && std::isfinite(a[d]) && std::isfinite(b[d])) {
      throw Error(Errc::arithmetic, "resource overflow in " + std::string(kDimensionNames[d]));
    }
  }
  return out;
}

ResourceVector rv_sub(const ResourceVector& a, const ResourceVector& b) {
  ResourceVector out;
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) out[d] = a[d] - b[d];
  return out;
}

ResourceVector rv_scale(const ResourceVector& a, double factor) {
  ResourceVector out;
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) out[d] = a[d] * factor;
  return out;
}

bool rv_fits(const ResourceVector& demand, const ResourceVector& capacity) {
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
    const double slack = kFitTolerance * std::max(1.0, std::abs(capacity[d]));
    if (demand[d] > capacity[d] + slack) return false;
  }
  return true;
}

bool rv_valid(const ResourceVector& v) {
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
    if (!std::isfinite(v[d]) || v[d] < 0.0) return false;
  }
  return true;
}

double rv_max_component(const ResourceVector& v) {
  return std::max({v.cpu, v.memory, v.disk, v.bandwidth});
}

double rv_mean_component(const ResourceVector& v) {
  return (v.cpu + v.memory + v.disk + v.bandwidth) / ResourceVector::kDims;
}

ResourceVector rv_clamp(const ResourceVector& v, const ResourceVector& lo, const ResourceVector& hi) {
  ResourceVector out;
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) out[d] = std::clamp(v[d], lo[d], hi[d]);
  return out;
}

std::ostream& operator<<(std::ostream& os, const ResourceVector& v) {
  return os << '(' << v.cpu << ',' << v.memory << ',' << v.disk << ',' << v.bandwidth << ')';
}

}  // namespace vmshield
