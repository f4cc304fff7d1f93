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
#include "vmshield/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>

#include "vmshield/error.hpp"

namespace vmshield {

namespace {

const std::deque<UsageRecord> kEmptySeries;

double population_mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_variance(std::span<const double> xs) {
  const double mean = population_mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(xs.size());
}

std::vector<double> dimension_values(const std::deque<UsageRecord>& series, std::size_t dim) {
  std::vector<double> out;
  out.reserve(series.size());
  for (const UsageRecord& r : series) out.push_back(r.usage[dim]);
  return out;
}

void append_number(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

}  // namespace

// ---------------------------------------------------------------- store

WorkloadStore::WorkloadStore(Tick retention_horizon) : horizon_(retention_horizon) {
  if (retention_horizon < 0) throw Error(Errc::configuration, "retention horizon must be >= 0");
}

void WorkloadStore::record(const UsageRecord& rec) {
  if (auto last = latest_time(rec.vm_id); last && rec.time < *last) {
    std::ostringstream msg;
    msg << "usage record for vm " << rec.vm_id << " at t=" << rec.time
        << " precedes latest t=" << *last;
    throw Error(Errc::ordering, msg.str());
  }
  if (!latest_ || rec.time > *latest_) latest_ = rec.time;
  if (size_ > 0 && oldest_ < *latest_ - horizon_) evict();

  if (size_ == 0 || rec.time < oldest_) oldest_ = rec.time;
  series_[rec.vm_id].push_back(rec);
  seqs_[rec.vm_id].push_back(next_seq_++);
  ++size_;
}

void WorkloadStore::evict() {
  const Tick cutoff = *latest_ - horizon_;
  bool any = false;
  Tick oldest = 0;
  for (auto it = series_.begin(); it != series_.end();) {
    auto& recs = it->second;
    auto& seqs = seqs_[it->first];
    while (!recs.empty() && recs.front().time < cutoff) {
      recs.pop_front();
      seqs.pop_front();
      --size_;
    }
    if (recs.empty()) {
      seqs_.erase(it->first);
      it = series_.erase(it);
      continue;
    }
    oldest = any ? std::min(oldest, recs.front().time) : recs.front().time;
    any = true;
    ++it;
  }
  oldest_ = oldest;
}

const std::deque<UsageRecord>& WorkloadStore::series(VmId vm) const {
  auto it = series_.find(vm);
  return it == series_.end() ? kEmptySeries : it->second;
}

std::optional<Tick> WorkloadStore::latest_time(VmId vm) const {
  const auto& s = series(vm);
  if (s.empty()) return std::nullopt;
  return s.back().time;
}

void WorkloadStore::write_csv(std::ostream& out) const {
  std::vector<std::pair<std::uint64_t, const UsageRecord*>> all;
  all.reserve(size_);
  for (const auto& [vm, recs] : series_) {
    const auto& seqs = seqs_.at(vm);
    for (std::size_t i = 0; i < recs.size(); ++i) all.emplace_back(seqs[i], &recs[i]);
  }
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::string line;
  out << "time,vm_id,server_id,cpu,mem,disk,bw\n";
  for (const auto& [seq, r] : all) {
    line.clear();
    line += std::to_string(r->time) + ',' + std::to_string(r->vm_id.value) + ',' +
            std::to_string(r->server_id.value);
    for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
      line += ',';
      append_number(line, r->usage[d]);
    }
    line += '\n';
    out << line;
  }
}

WorkloadStore& record_usage(WorkloadStore& store, const UsageRecord& rec) {
  store.record(rec);
  return store;
}

// ----------------------------------------------------------- normalizer

Normalizer Normalizer::fit(std::span<const double> series, NormalizationMethod method) {
  if (series.empty()) throw Error(Errc::precondition, "cannot fit a normalizer on an empty series");
  Normalizer n;
  n.method_ = method;
  const auto [mn, mx] = std::minmax_element(series.begin(), series.end());
  switch (method) {
    case NormalizationMethod::min_max:
      n.offset_ = *mn;
      n.scale_ = *mx - *mn;
      n.lo_ = *mn;
      n.hi_ = *mx;
      if (!(n.scale_ > 0.0)) {
        // unit range fallback: apply(x) = x - min
        n.scale_ = 1.0;
        n.degenerate_ = true;
      }
      break;
    case NormalizationMethod::z_score: {
      const double mean = population_mean(series);
      const double sd = std::sqrt(population_variance(series));
      if (!(sd > 0.0)) {
        throw Error(Errc::degenerate_series, "z-score normalization of a constant series");
      }
      n.offset_ = mean;
      n.scale_ = sd;
      n.lo_ = *mn;
      n.hi_ = *mx;
      break;
    }
    case NormalizationMethod::clip: {
      const double mean = population_mean(series);
      const double sd = std::sqrt(population_variance(series));
      n.offset_ = 0.0;
      n.scale_ = 1.0;
      n.lo_ = mean - 3.0 * sd;
      n.hi_ = mean + 3.0 * sd;
      n.degenerate_ = !(sd > 0.0);
      break;
    }
  }
  return n;
}

double Normalizer::apply(double x) const {
  if (method_ == NormalizationMethod::clip) return std::clamp(x, lo_, hi_);
  return (x - offset_) / scale_;
}

double Normalizer::invert(double y) const {
  if (method_ == NormalizationMethod::clip) return y;
  return y * scale_ + offset_;
}

Normalizer fit_normalizer(std::span<const double> series, NormalizationMethod method) {
  return Normalizer::fit(series, method);
}

// ---------------------------------------------------- feature selection

std::vector<std::size_t> select_features(const WorkloadStore& store, VmId vm,
                                         double variance_floor) {
  const auto& series = store.series(vm);
  std::vector<std::size_t> dims(ResourceVector::kDims);
  std::iota(dims.begin(), dims.end(), 0);
  if (series.size() < 2) return dims;

  std::array<double, ResourceVector::kDims> variance{};
  for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
    variance[d] = population_variance(dimension_values(series, d));
  }
  std::stable_sort(dims.begin(), dims.end(),
                   [&](std::size_t a, std::size_t b) { return variance[a] > variance[b]; });
  std::vector<std::size_t> kept{dims.front()};
  for (std::size_t i = 1; i < dims.size(); ++i) {
    if (variance[dims[i]] >= variance_floor) kept.push_back(dims[i]);
  }
  return kept;
}

// ------------------------------------------------------------ regression

LagWindows LagWindows::build(std::span<const double> series, std::size_t lags) {
  LagWindows w;
  w.lags = lags;
  if (lags == 0 || series.size() <= lags) return w;
  for (std::size_t t = lags; t < series.size(); ++t) {
    std::vector<double> row(lags + 1);
    row[0] = 1.0;
    for (std::size_t j = 1; j <= lags; ++j) row[j] = series[t - j];
    w.rows.push_back(std::move(row));
    w.targets.push_back(series[t]);
  }
  return w;
}

double window_mse(std::span<const double> w, const LagWindows& windows) {
  if (windows.rows.empty()) throw Error(Errc::precondition, "no training windows");
  double acc = 0.0;
  for (std::size_t i = 0; i < windows.rows.size(); ++i) {
    const double err =
        std::inner_product(w.begin(), w.end(), windows.rows[i].begin(), 0.0) - windows.targets[i];
    acc += err * err;
  }
  return acc / static_cast<double>(windows.rows.size());
}

std::vector<double> window_mse_gradient(std::span<const double> w, const LagWindows& windows) {
  if (windows.rows.empty()) throw Error(Errc::precondition, "no training windows");
  std::vector<double> grad(w.size(), 0.0);
  const double scale = 2.0 / static_cast<double>(windows.rows.size());
  for (std::size_t i = 0; i < windows.rows.size(); ++i) {
    const auto& row = windows.rows[i];
    const double err = std::inner_product(w.begin(), w.end(), row.begin(), 0.0) - windows.targets[i];
    for (std::size_t j = 0; j < w.size(); ++j) grad[j] += scale * err * row[j];
  }
  return grad;
}

TrainReport descend(std::vector<double>& weights, const LagWindows& windows, double learning_rate,
                    std::size_t epochs) {
  const std::size_t p = windows.lags + 1;
  if (weights.size() != p) throw Error(Errc::precondition, "weight count must be lags + 1");
  if (windows.rows.empty()) throw Error(Errc::precondition, "no training windows");

  // Sufficient statistics: the batch loss and gradient only depend on the
  // second moments of the windows, so each epoch costs O(p^2).
  const double n = static_cast<double>(windows.rows.size());
  std::vector<double> gram(p * p, 0.0);
  std::vector<double> cross(p, 0.0);
  double target_sq = 0.0;
  for (std::size_t i = 0; i < windows.rows.size(); ++i) {
    const auto& row = windows.rows[i];
    const double y = windows.targets[i];
    for (std::size_t a = 0; a < p; ++a) {
      cross[a] += row[a] * y / n;
      for (std::size_t b = 0; b < p; ++b) gram[a * p + b] += row[a] * row[b] / n;
    }
    target_sq += y * y / n;
  }
  auto loss_of = [&](const std::vector<double>& w, std::vector<double>* grad) {
    double quad = 0.0;
    double lin = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      double gw = 0.0;
      for (std::size_t b = 0; b < p; ++b) gw += gram[a * p + b] * w[b];
      quad += w[a] * gw;
      lin += w[a] * cross[a];
      if (grad) (*grad)[a] = 2.0 * (gw - cross[a]);
    }
    return std::max(0.0, quad - 2.0 * lin + target_sq);
  };

  TrainReport report;
  std::vector<double> grad(p);
  std::vector<double> candidate(p);
  double loss = loss_of(weights, &grad);
  report.loss_history.push_back(loss);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t j = 0; j < p; ++j) candidate[j] = weights[j] - learning_rate * grad[j];
    std::vector<double> next_grad(p);
    const double next = loss_of(candidate, &next_grad);
    if (!(next <= loss)) {
      report.early_stopped = true;
      break;
    }
    weights = candidate;
    grad = std::move(next_grad);
    loss = next;
    report.loss_history.push_back(loss);
  }
  return report;
}

// ------------------------------------------------------------- predictor

Predictor::Predictor(std::size_t lags, double learning_rate)
    : lags_(lags), learning_rate_(learning_rate) {
  if (lags == 0) throw Error(Errc::configuration, "predictor needs at least one lag");
  if (!(learning_rate > 0.0)) throw Error(Errc::configuration, "learning rate must be > 0");
  for (auto& w : weights_) w.assign(lags + 1, 0.0);
}

void Predictor::set_weights(std::size_t dim, std::vector<double> w) {
  if (w.size() != lags_ + 1) throw Error(Errc::precondition, "weight count must be lags + 1");
  weights_.at(dim) = std::move(w);
}

double Predictor::step(std::size_t dim, std::span<const double> recent) const {
  if (recent.size() < lags_) throw Error(Errc::precondition, "window shorter than lag order");
  const auto& w = weights_[dim];
  double y = w[0];
  for (std::size_t j = 1; j <= lags_; ++j) y += w[j] * recent[recent.size() - j];
  return y;
}

Predictor train(Predictor pred, const WorkloadStore& store, VmId vm, std::size_t epochs, Tick now) {
  const auto& series = store.series(vm);
  if (series.size() < pred.lags_ + 2) {
    std::ostringstream msg;
    msg << "vm " << vm << " has " << series.size() << " samples, training needs "
        << pred.lags_ + 2;
    throw Error(Errc::not_enough_history, msg.str());
  }
  pred.features_ = select_features(store, vm);
  pred.dim_trained_.fill(false);
  for (std::size_t dim : pred.features_) {
    const std::vector<double> raw = dimension_values(series, dim);
    pred.normalizers_[dim] = Normalizer::fit(raw, NormalizationMethod::min_max);
    std::vector<double> normalized(raw.size());
    std::transform(raw.begin(), raw.end(), normalized.begin(),
                   [&](double x) { return pred.normalizers_[dim].apply(x); });
    const LagWindows windows = LagWindows::build(normalized, pred.lags_);
    descend(pred.weights_[dim], windows, pred.learning_rate_, epochs);
    pred.dim_trained_[dim] = true;
  }
  pred.trained_at_ = now;
  return pred;
}

ResourceVector predict_vm(const Predictor& pred, const WorkloadStore& store, VmId vm, Tick horizon,
                          const ResourceVector& capacity) {
  const auto& series = store.series(vm);
  if (series.empty()) return capacity;
  ResourceVector out = series.back().usage;
  if (horizon > 0 && pred.trained() && series.size() >= pred.lags()) {
    for (std::size_t d = 0; d < ResourceVector::kDims; ++d) {
      if (!pred.dimension_trained(d)) continue;
      const Normalizer& norm = pred.normalizer(d);
      std::vector<double> recent;
      recent.reserve(pred.lags() + static_cast<std::size_t>(horizon));
      for (std::size_t i = series.size() - pred.lags(); i < series.size(); ++i) {
        recent.push_back(norm.apply(series[i].usage[d]));
      }
      for (Tick h = 0; h < horizon; ++h) recent.push_back(pred.step(d, recent));
      out[d] = norm.invert(recent.back());
    }
  }
  return rv_clamp(out, ResourceVector{}, capacity);
}

ResourceVector predict_server(const ForecastMap& forecasts, const Server& server) {
  ResourceVector total;
  for (VmId vm : server.hosted_vm_ids) {
    auto it = forecasts.find(vm);
    if (it == forecasts.end()) {
      std::ostringstream msg;
      msg << "no forecast for vm " << vm << " on server " << server.id;
      throw Error(Errc::incomplete_forecast, msg.str());
    }
    total += it->second;
  }
  return total;
}

// -------------------------------------------------------------- analyzer

void WorkloadAnalyzer::retrain_due(const WorkloadStore& store, std::span<const VmId> vms, Tick now) {
  for (VmId vm : vms) {
    auto it = predictors_.find(vm);
    if (it != predictors_.end() && it->second.trained() &&
        now - *it->second.trained_at() < config_.retrain_every) {
      continue;
    }
    if (store.series(vm).size() < config_.lags + 2) continue;
    Predictor base = it != predictors_.end() ? it->second
                                             : Predictor(config_.lags, config_.learning_rate);
    predictors_.insert_or_assign(vm, train(std::move(base), store, vm, config_.epochs, now));
  }
}

ResourceVector WorkloadAnalyzer::forecast(const WorkloadStore& store, VmId vm,
                                          const ResourceVector& capacity) const {
  if (const Predictor* p = predictor(vm)) return predict_vm(*p, store, vm, config_.horizon, capacity);
  const Predictor fallback(config_.lags, config_.learning_rate);
  return predict_vm(fallback, store, vm, config_.horizon, capacity);
}

const Predictor* WorkloadAnalyzer::predictor(VmId vm) const {
  auto it = predictors_.find(vm);
  return it == predictors_.end() ? nullptr : &it->second;
}

}  // namespace vmshield
