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
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "vmshield/ids.hpp"
#include "vmshield/model.hpp"
#include "vmshield/resource.hpp"

namespace vmshield {

struct UsageRecord {
  Tick time = 0;
  VmId vm_id;
  ServerId server_id;
  ResourceVector usage;
};

/// Append-only usage history with a retention horizon measured back from the
/// latest recorded time. Records are kept per VM so series lookups are cheap.
class WorkloadStore {
 public:
  explicit WorkloadStore(Tick retention_horizon = 96);

  /// Evicts records older than latest - horizon (latest including rec.time),
  /// then appends `rec`. Throws Errc::ordering when rec.time precedes the VM's
  /// latest record.
  void record(const UsageRecord& rec);

  const std::deque<UsageRecord>& series(VmId vm) const;
  std::optional<Tick> latest_time() const { return latest_; }
  std::optional<Tick> latest_time(VmId vm) const;
  Tick retention_horizon() const { return horizon_; }
  std::size_t size() const { return size_; }

  /// CSV dump: `time,vm_id,server_id,cpu,mem,disk,bw` in insertion order.
  void write_csv(std::ostream& out) const;

 private:
  void evict();

  Tick horizon_;
  std::optional<Tick> latest_;
  Tick oldest_ = 0;
  std::size_t size_ = 0;
  std::uint64_t next_seq_ = 0;
  std::map<VmId, std::deque<UsageRecord>> series_;
  std::map<VmId, std::deque<std::uint64_t>> seqs_;
};

/// Free-function form of WorkloadStore::record.
WorkloadStore& record_usage(WorkloadStore& store, const UsageRecord& rec);

enum class NormalizationMethod { min_max, z_score, clip };

class Normalizer {
 public:
  Normalizer() = default;

  /// Throws Errc::precondition for an empty series and
  /// Errc::degenerate_series for z-score on a constant series.
  static Normalizer fit(std::span<const double> series, NormalizationMethod method);

  double apply(double x) const;
  double invert(double y) const;

  NormalizationMethod method() const { return method_; }
  /// min (min-max) or mean (z-score)
  double offset() const { return offset_; }
  /// range (min-max) or population stddev (z-score)
  double scale() const { return scale_; }
  double lower_bound() const { return lo_; }
  double upper_bound() const { return hi_; }
  bool degenerate() const { return degenerate_; }

 private:
  NormalizationMethod method_ = NormalizationMethod::min_max;
  double offset_ = 0.0;
  double scale_ = 1.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  bool degenerate_ = false;
};

Normalizer fit_normalizer(std::span<const double> series, NormalizationMethod method);

/// Dimensions ranked by variance, descending; dimensions below the floor are
/// dropped but the top one always survives. With fewer than two records every
/// dimension is returned in declaration order.
std::vector<std::size_t> select_features(const WorkloadStore& store, VmId vm,
                                         double variance_floor = 1e-12);

/// Sliding-window regression problem: row i holds [1, s[t-1], ..., s[t-k]] and
/// target s[t] for t = k .. n-1.
struct LagWindows {
  std::size_t lags = 0;
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;

  static LagWindows build(std::span<const double> series, std::size_t lags);
};

/// Mean squared error of the linear model with weights `w` (bias first).
double window_mse(std::span<const double> w, const LagWindows& windows);
/// Analytic gradient of window_mse with respect to `w`.
std::vector<double> window_mse_gradient(std::span<const double> w, const LagWindows& windows);

struct TrainReport {
  std::vector<double> loss_history;
  bool early_stopped = false;
};

/// Full-batch gradient descent on window_mse starting from `weights`. Loss is
/// non-increasing: a step that would raise it is discarded and training stops.
TrainReport descend(std::vector<double>& weights, const LagWindows& windows, double learning_rate,
                    std::size_t epochs);

/// Per-resource linear autoregressive forecaster (bias + k lags) trained on
/// min-max normalized usage.
class Predictor {
 public:
  explicit Predictor(std::size_t lags = 12, double learning_rate = 0.01);

  std::size_t lags() const { return lags_; }
  double learning_rate() const { return learning_rate_; }
  bool trained() const { return trained_at_.has_value(); }
  std::optional<Tick> trained_at() const { return trained_at_; }

  std::span<const double> weights(std::size_t dim) const { return weights_[dim]; }
  void set_weights(std::size_t dim, std::vector<double> w);
  bool dimension_trained(std::size_t dim) const { return dim_trained_[dim]; }
  const Normalizer& normalizer(std::size_t dim) const { return normalizers_[dim]; }
  const std::vector<std::size_t>& features() const { return features_; }

  /// Model output for the next normalized sample; `recent` is oldest first and
  /// holds at least lags() values.
  double step(std::size_t dim, std::span<const double> recent) const;

 private:
  friend Predictor train(Predictor pred, const WorkloadStore& store, VmId vm, std::size_t epochs,
                         Tick now);

  std::size_t lags_;
  double learning_rate_;
  std::array<std::vector<double>, ResourceVector::kDims> weights_;
  std::array<Normalizer, ResourceVector::kDims> normalizers_;
  std::array<bool, ResourceVector::kDims> dim_trained_{};
  std::vector<std::size_t> features_;
  std::optional<Tick> trained_at_;
};

/// Trains the selected dimensions of `pred` on the VM's stored series, warm
/// starting from its current weights. Throws Errc::not_enough_history when
/// fewer than lags+2 samples are stored.
Predictor train(Predictor pred, const WorkloadStore& store, VmId vm, std::size_t epochs, Tick now);

/// Iterated one-step forecast `horizon` ticks ahead, clamped to [0, capacity].
/// Untrained dimensions echo the last observation; a VM with no history is
/// forecast at its full capacity.
ResourceVector predict_vm(const Predictor& pred, const WorkloadStore& store, VmId vm, Tick horizon,
                          const ResourceVector& capacity);

using ForecastMap = std::unordered_map<VmId, ResourceVector>;

/// Component-wise sum of the forecasts of the server's hosted VMs. Throws
/// Errc::incomplete_forecast when one is missing.
ResourceVector predict_server(const ForecastMap& forecasts, const Server& server);

struct AnalyzerConfig {
  std::size_t lags = 12;
  double learning_rate = 0.01;
  std::size_t epochs = 200;
  Tick retrain_every = 24;
  Tick horizon = 12;
};

/// Owns one predictor per VM and retrains it on schedule.
class WorkloadAnalyzer {
 public:
  explicit WorkloadAnalyzer(AnalyzerConfig config) : config_(config) {}

  /// Retrains every listed VM whose model is missing or older than
  /// retrain_every. VMs with too little history keep their fallback.
  void retrain_due(const WorkloadStore& store, std::span<const VmId> vms, Tick now);
  ResourceVector forecast(const WorkloadStore& store, VmId vm, const ResourceVector& capacity) const;
  void forget(VmId vm) { predictors_.erase(vm); }

  const Predictor* predictor(VmId vm) const;
  const AnalyzerConfig& config() const { return config_; }

 private:
  AnalyzerConfig config_;
  std::map<VmId, Predictor> predictors_;
};

}  // namespace vmshield
