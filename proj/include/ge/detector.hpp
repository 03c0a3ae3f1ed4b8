/*
 * Copyright 2026 The Grounded Explainer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Rolling z-score anomaly detection and cross-source reaction fusion.

#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ge/error.hpp"
#include "ge/signal.hpp"

namespace ge {

struct DetectorConfig {
  double z_threshold = 2.5;
  TimestampMs detection_window_ms = 500;
  TimestampMs baseline_span_ms = 10000;
  std::size_t min_baseline_samples = 5;
  double epsilon_sd = 1e-9;
  TimestampMs refractory_ms = 2000;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

inline void validate(const DetectorConfig& c) {
  if (!(c.z_threshold > 0.0)) throw Error(Errc::kInvalidArgument, "z_threshold must be > 0");
  if (c.detection_window_ms <= 0) throw Error(Errc::kInvalidArgument, "detection_window_ms must be > 0");
  if (c.baseline_span_ms <= 0) throw Error(Errc::kInvalidArgument, "baseline_span_ms must be > 0");
  if (c.detection_window_ms > c.baseline_span_ms)
    throw Error(Errc::kInvalidArgument, "detection_window_ms must not exceed baseline_span_ms");
  if (c.min_baseline_samples == 0) throw Error(Errc::kInvalidArgument, "min_baseline_samples must be > 0");
  if (!(c.epsilon_sd > 0.0)) throw Error(Errc::kInvalidArgument, "epsilon_sd must be > 0");
  if (c.refractory_ms < 0) throw Error(Errc::kInvalidArgument, "refractory_ms must be >= 0");
}

struct AnomalyEvent {
  std::string source_id;
  TimestampMs timestamp_ms = 0;
  double z_score = 0.0;
  double sample_value = 0.0;

  friend bool operator==(const AnomalyEvent&, const AnomalyEvent&) = default;
};

struct ReactionEvent {
  TimestampMs timestamp_ms = 0;
  std::vector<AnomalyEvent> contributing;
  std::optional<std::string> feature_id;

  friend bool operator==(const ReactionEvent&, const ReactionEvent&) = default;
};

// Direct z-score of x against a baseline, population sd. Zero when the
// baseline is empty or its sd is below epsilon_sd.
inline double rolling_zscore(std::span<const double> history, double x, double epsilon_sd = 1e-9) {
  if (history.empty()) return 0.0;
  const auto n = static_cast<double>(history.size());
  double mean = 0.0;
  for (double v : history) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : history) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (sd < epsilon_sd) return 0.0;
  return (x - mean) / sd;
}

namespace detail {

// Neumaier-compensated running sum; supports removal by adding -v.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      carry_ += (sum_ - t) + v;
    else
      carry_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }
  void reset() { sum_ = carry_ = 0.0; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace detail

// Incremental per-source detector.
//
// The baseline holds the non-anomalous samples with timestamp in
// [t - baseline_span_ms, t). While it has fewer than min_baseline_samples
// entries, samples are absorbed without scoring. Anomalous samples never
// enter the baseline.
//
// Sums are compensated, kept relative to an anchor value and rebuilt from
// the window whenever as many updates as the window holds have accumulated,
// or when the mean has drifted far from the anchor relative to the spread.
class ZScoreDetector {
 public:
  ZScoreDetector(std::string source_id, DetectorConfig config)
      : source_id_(std::move(source_id)), config_(config) {
    validate(config_);
  }

  std::optional<AnomalyEvent> push(TimestampMs t, double x) {
    if (last_t_ && t <= *last_t_)
      throw Error(Errc::kNonMonotonicTimestamp,
                  "detector input for '" + source_id_ + "' at " + std::to_string(t) + " is not increasing");
    last_t_ = t;

    while (!window_.empty() && window_.front().first < t - config_.baseline_span_ms) {
      const double d = window_.front().second - anchor_;
      sum_.add(-d);
      sum_sq_.add(-(d * d));
      window_.pop_front();
      ++updates_;
    }

    if (window_.size() < config_.min_baseline_samples) {
      admit(t, x);
      return std::nullopt;
    }

    const auto n = static_cast<double>(window_.size());
    double mean_offset = sum_.value() / n;
    double var = (sum_sq_.value() - sum_.value() * mean_offset) / n;
    // Most of the second moment cancelled: the running sums no longer carry
    // enough digits, so score this sample from the window directly.
    if (sum_sq_.value() > 0.0 && !(var * kCancellationLimit > sum_sq_.value() / n)) {
      rebuild();
      mean_offset = sum_.value() / n;
      var = (sum_sq_.value() - sum_.value() * mean_offset) / n;
    }
    if (var < 0.0) var = 0.0;
    const double sd = std::sqrt(var);
    const double z = sd < config_.epsilon_sd ? 0.0 : ((x - anchor_) - mean_offset) / sd;

    if (std::abs(z) >= config_.z_threshold) return AnomalyEvent{source_id_, t, z, x};
    admit(t, x);
    return std::nullopt;
  }

  const std::string& source_id() const { return source_id_; }
  std::size_t baseline_size() const { return window_.size(); }

 private:
  void admit(TimestampMs t, double x) {
    if (window_.empty()) {
      anchor_ = x;
      sum_.reset();
      sum_sq_.reset();
      updates_ = 0;
    }
    window_.emplace_back(t, x);
    const double d = x - anchor_;
    sum_.add(d);
    sum_sq_.add(d * d);
    if (++updates_ >= std::max<std::size_t>(window_.size(), 32)) rebuild();
  }

  void rebuild() {
    double mean = 0.0;
    for (const auto& [t, v] : window_) mean += v;
    anchor_ = mean / static_cast<double>(window_.size());
    sum_.reset();
    sum_sq_.reset();
    for (const auto& [t, v] : window_) {
      const double d = v - anchor_;
      sum_.add(d);
      sum_sq_.add(d * d);
    }
    updates_ = 0;
  }

  static constexpr double kCancellationLimit = 16.0;

  std::string source_id_;
  DetectorConfig config_;
  std::deque<std::pair<TimestampMs, double>> window_;
  std::optional<TimestampMs> last_t_;
  double anchor_ = 0.0;
  detail::CompensatedSum sum_;
  detail::CompensatedSum sum_sq_;
  std::size_t updates_ = 0;
};

// Runs one detector over a single-source stream.
inline std::vector<AnomalyEvent> detect_anomalies(const SampleStream& stream, const DetectorConfig& config) {
  std::vector<AnomalyEvent> out;
  if (stream.empty()) return out;
  ZScoreDetector detector(stream.front().source_id, config);
  for (const auto& s : stream) {
    if (s.source_id != detector.source_id())
      throw Error(Errc::kInvalidArgument, "detect_anomalies expects a single source, got '" + s.source_id + "'");
    if (auto a = detector.push(s.timestamp_ms, s.value)) out.push_back(std::move(*a));
  }
  return out;
}

// One detector per source over a merged, time-ordered stream; anomalies come
// out in stream order.
inline std::vector<AnomalyEvent> detect_merged(const SampleStream& merged, const DetectorConfig& config) {
  std::map<std::string, ZScoreDetector> detectors;
  std::vector<AnomalyEvent> out;
  for (const auto& s : merged) {
    auto it = detectors.find(s.source_id);
    if (it == detectors.end()) it = detectors.emplace(s.source_id, ZScoreDetector(s.source_id, config)).first;
    if (auto a = it->second.push(s.timestamp_ms, s.value)) out.push_back(std::move(*a));
  }
  return out;
}

using PresentationContext = std::function<std::optional<std::string>(TimestampMs)>;

// Greedy grouping of time-ordered anomalies into reactions. A reaction opens
// at the first anomaly at least refractory_ms after the previous opener;
// anomalies in [opener, opener + detection_window_ms) join it; anything else
// is suppressed.
class ReactionFuser {
 public:
  enum class Outcome { kOpened, kJoined, kSuppressed };

  explicit ReactionFuser(DetectorConfig config, PresentationContext context = {})
      : config_(config), context_(std::move(context)) {}

  // True once `now` is past the open reaction's grouping window.
  bool due(TimestampMs now) const {
    return open_ && now - open_->timestamp_ms >= config_.detection_window_ms;
  }

  Outcome push(const AnomalyEvent& a) {
    if (open_ && a.timestamp_ms - open_->timestamp_ms < config_.detection_window_ms) {
      open_->contributing.push_back(a);
      return Outcome::kJoined;
    }
    if (open_) completed_.push_back(*close());
    if (last_open_ && a.timestamp_ms - *last_open_ < config_.refractory_ms) {
      ++suppressed_;
      return Outcome::kSuppressed;
    }
    open_ = ReactionEvent{a.timestamp_ms, {a}, context_ ? context_(a.timestamp_ms) : std::nullopt};
    last_open_ = a.timestamp_ms;
    return Outcome::kOpened;
  }

  std::optional<ReactionEvent> close() { return std::exchange(open_, std::nullopt); }

  const std::optional<ReactionEvent>& open() const { return open_; }

  std::vector<ReactionEvent> take_completed() { return std::exchange(completed_, {}); }

  std::size_t suppressed() const { return suppressed_; }

 private:
  DetectorConfig config_;
  PresentationContext context_;
  std::optional<ReactionEvent> open_;
  std::optional<TimestampMs> last_open_;
  std::vector<ReactionEvent> completed_;
  std::size_t suppressed_ = 0;
};

inline std::vector<ReactionEvent> fuse_reactions(const std::vector<AnomalyEvent>& anomalies,
                                                 const DetectorConfig& config,
                                                 PresentationContext context = {}) {
  ReactionFuser fuser(config, std::move(context));
  for (const auto& a : anomalies) fuser.push(a);
  auto out = fuser.take_completed();
  if (auto last = fuser.close()) out.push_back(std::move(*last));
  return out;
}

}  // namespace ge
