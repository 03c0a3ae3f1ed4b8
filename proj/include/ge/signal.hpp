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

// Arousal signal sources: trace replay, synthesis and time-ordered merging.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <vector>

#include "ge/error.hpp"
#include "ge/rng.hpp"

namespace ge {

using TimestampMs = std::int64_t;

enum class SourceKind {
  kHeartRateBpm,
  kFacialArousal,
  kFacialValence,
  kSelfReportArousal,
  kExternalScalar,
};

constexpr std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kHeartRateBpm: return "heart_rate_bpm";
    case SourceKind::kFacialArousal: return "facial_arousal";
    case SourceKind::kFacialValence: return "facial_valence";
    case SourceKind::kSelfReportArousal: return "self_report_arousal";
    case SourceKind::kExternalScalar: return "external_scalar";
  }
  return "external_scalar";
}

inline std::optional<SourceKind> parse_source_kind(std::string_view text) {
  for (auto kind : {SourceKind::kHeartRateBpm, SourceKind::kFacialArousal,
                    SourceKind::kFacialValence, SourceKind::kSelfReportArousal,
                    SourceKind::kExternalScalar}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

struct SourceDescriptor {
  std::string source_id;
  SourceKind kind = SourceKind::kExternalScalar;
  std::string units;
  double expected_rate_hz = 1.0;
  ValueRange valid_range;

  friend bool operator==(const SourceDescriptor&, const SourceDescriptor&) = default;
};

inline void validate(const SourceDescriptor& d) {
  if (d.source_id.empty()) throw Error(Errc::kInvalidArgument, "source_id must not be empty");
  if (!(d.expected_rate_hz > 0.0))
    throw Error(Errc::kInvalidArgument, "expected_rate_hz must be > 0 for " + d.source_id);
  if (!(d.valid_range.lo < d.valid_range.hi))
    throw Error(Errc::kInvalidArgument, "valid_range requires lo < hi for " + d.source_id);
}

// Defaults: heart rate 10 Hz, camera 30 Hz, self-report 5 Hz (slider).
inline SourceDescriptor default_descriptor(std::string source_id, SourceKind kind) {
  SourceDescriptor d{std::move(source_id), kind, "", 1.0, {-1.0, 1.0}};
  switch (kind) {
    case SourceKind::kHeartRateBpm:
      d.units = "bpm";
      d.expected_rate_hz = 10.0;
      d.valid_range = {30.0, 220.0};
      break;
    case SourceKind::kFacialArousal:
    case SourceKind::kFacialValence:
      d.expected_rate_hz = 30.0;
      break;
    case SourceKind::kSelfReportArousal:
      d.expected_rate_hz = 5.0;
      break;
    case SourceKind::kExternalScalar:
      d.valid_range = {-1e12, 1e12};
      break;
  }
  return d;
}

struct SignalSample {
  std::string source_id;
  TimestampMs timestamp_ms = 0;
  double value = 0.0;

  friend bool operator==(const SignalSample&, const SignalSample&) = default;
};

using SampleStream = std::vector<SignalSample>;

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace detail {

inline std::vector<std::string_view> split_csv_row(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace detail

inline constexpr std::string_view kTraceHeader = "timestamp_ms,source_id,value";

// Checks per-source monotonicity and value ranges. Used by trace parsing
// (where violations are errors) and by live ingestion (where they are
// rejections that get counted).
class SampleGate {
 public:
  enum class Verdict { kAccepted, kUnknownSource, kNonMonotonic, kOutOfRange };

  explicit SampleGate(std::vector<SourceDescriptor> descriptors) {
    for (auto& d : descriptors) {
      validate(d);
      auto id = d.source_id;
      if (!descriptors_.emplace(id, std::move(d)).second)
        throw Error(Errc::kInvalidArgument, "duplicate source_id " + id);
    }
  }

  Verdict check(const SignalSample& s) {
    auto it = descriptors_.find(s.source_id);
    if (it == descriptors_.end()) return reject(Verdict::kUnknownSource);
    auto last = last_ts_.find(s.source_id);
    if (last != last_ts_.end() && s.timestamp_ms <= last->second)
      return reject(Verdict::kNonMonotonic);
    if (s.timestamp_ms < 0) return reject(Verdict::kNonMonotonic);
    if (!std::isfinite(s.value) || !it->second.valid_range.contains(s.value))
      return reject(Verdict::kOutOfRange);
    last_ts_[s.source_id] = s.timestamp_ms;
    ++accepted_;
    return Verdict::kAccepted;
  }

  const SourceDescriptor* find(const std::string& source_id) const {
    auto it = descriptors_.find(source_id);
    return it == descriptors_.end() ? nullptr : &it->second;
  }

  std::size_t accepted() const { return accepted_; }
  std::size_t rejected() const { return rejected_; }

 private:
  Verdict reject(Verdict v) {
    ++rejected_;
    return v;
  }

  std::map<std::string, SourceDescriptor> descriptors_;
  std::map<std::string, TimestampMs> last_ts_;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
};

// Parses trace CSV text. Rows whose source is not among `descriptors` are
// skipped when `skip_unknown` is set and are an error otherwise. Returns one
// stream per descriptor, in file order.
inline std::map<std::string, SampleStream> parse_trace(std::istream& in,
                                                       const std::vector<SourceDescriptor>& descriptors,
                                                       bool skip_unknown,
                                                       const std::string& name = "<trace>") {
  SampleGate gate(descriptors);
  std::map<std::string, SampleStream> streams;
  for (const auto& d : descriptors) streams[d.source_id];

  auto fail = [&](Errc code, std::size_t line_no, const std::string& msg) {
    throw Error(code, name + ":" + std::to_string(line_no) + ": " + msg);
  };

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') fail(Errc::kParse, line_no, "CR line ending");
    if (!header_seen) {
      if (line != kTraceHeader) fail(Errc::kParse, line_no, "expected header '" + std::string(kTraceHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      fail(Errc::kParse, line_no, "empty row");
    }
    auto fields = detail::split_csv_row(line);
    if (fields.size() != 3) fail(Errc::kParse, line_no, "expected 3 fields");
    SignalSample s;
    if (!detail::parse_number(fields[0], s.timestamp_ms) || s.timestamp_ms < 0)
      fail(Errc::kParse, line_no, "bad timestamp_ms '" + std::string(fields[0]) + "'");
    if (fields[1].empty()) fail(Errc::kParse, line_no, "empty source_id");
    s.source_id = std::string(fields[1]);
    if (!detail::parse_number(fields[2], s.value) || !std::isfinite(s.value))
      fail(Errc::kParse, line_no, "bad value '" + std::string(fields[2]) + "'");

    switch (gate.check(s)) {
      case SampleGate::Verdict::kAccepted:
        streams[s.source_id].push_back(std::move(s));
        break;
      case SampleGate::Verdict::kUnknownSource:
        if (!skip_unknown) fail(Errc::kUnknownSource, line_no, "unknown source '" + s.source_id + "'");
        break;
      case SampleGate::Verdict::kNonMonotonic:
        fail(Errc::kNonMonotonicTimestamp, line_no,
             "timestamp " + std::to_string(s.timestamp_ms) + " does not increase for '" + s.source_id + "'");
        break;
      case SampleGate::Verdict::kOutOfRange:
        fail(Errc::kOutOfRange, line_no, "value " + format_double(s.value) + " outside valid range of '" +
                                             s.source_id + "'");
        break;
    }
  }
  if (!header_seen) fail(Errc::kParse, 1, "missing header");
  return streams;
}

inline std::map<std::string, SampleStream> read_trace(const std::string& path,
                                                      const std::vector<SourceDescriptor>& descriptors,
                                                      bool skip_unknown = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open trace " + path);
  return parse_trace(in, descriptors, skip_unknown, path);
}

// Replays the rows of one source from a (possibly multi-source) trace file.
inline SampleStream open_trace(const std::string& path, const SourceDescriptor& descriptor) {
  return std::move(read_trace(path, {descriptor}, /*skip_unknown=*/true).at(descriptor.source_id));
}

// Source ids in first-appearance order; used when no descriptors are known.
inline std::vector<std::string> scan_trace_sources(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open trace " + path);
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (++line_no == 1 || line.empty()) continue;
    auto fields = detail::split_csv_row(line);
    if (fields.size() != 3)
      throw Error(Errc::kParse, path + ":" + std::to_string(line_no) + ": expected 3 fields");
    std::string id(fields[1]);
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(std::move(id));
  }
  return ids;
}

inline std::string format_trace(const SampleStream& samples) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& s : samples) {
    out += std::to_string(s.timestamp_ms);
    out += ',';
    out += s.source_id;
    out += ',';
    out += format_double(s.value);
    out += '\n';
  }
  return out;
}

struct Burst {
  TimestampMs start_ms = 0;
  TimestampMs duration_ms = 0;
  double delta = 0.0;
};

struct SynthSpec {
  std::string source_id = "hr";
  double baseline = 0.0;
  double noise_sd = 0.0;
  double rate_hz = 10.0;
  TimestampMs duration_ms = 1000;
  std::vector<Burst> bursts;
  std::uint64_t seed = 0;
};

inline void validate(const SynthSpec& spec) {
  if (spec.source_id.empty()) throw Error(Errc::kInvalidArgument, "synth source_id must not be empty");
  if (!(spec.noise_sd >= 0.0)) throw Error(Errc::kInvalidArgument, "noise_sd must be >= 0");
  // Above 1 kHz rounded millisecond timestamps would collide.
  if (!(spec.rate_hz > 0.0) || spec.rate_hz > 1000.0)
    throw Error(Errc::kInvalidArgument, "rate_hz must be in (0, 1000]");
  if (spec.duration_ms <= 0) throw Error(Errc::kInvalidArgument, "duration_ms must be > 0");
  for (const auto& b : spec.bursts) {
    if (b.start_ms < 0 || b.duration_ms < 0 || b.start_ms + b.duration_ms > spec.duration_ms)
      throw Error(Errc::kInvalidArgument, "burst outside [0, duration_ms]");
  }
}

// Samples at round(i * 1000 / rate_hz) for every such timestamp below
// duration_ms. A burst is active on [start_ms, start_ms + duration_ms).
inline SampleStream synth_trace(const SynthSpec& spec) {
  validate(spec);
  GaussianSource noise(spec.seed);
  SampleStream out;
  for (std::int64_t i = 0;; ++i) {
    const auto t = static_cast<TimestampMs>(std::llround(static_cast<double>(i) * 1000.0 / spec.rate_hz));
    if (t >= spec.duration_ms) break;
    double value = spec.baseline;
    for (const auto& b : spec.bursts) {
      if (t >= b.start_ms && t < b.start_ms + b.duration_ms) value += b.delta;
    }
    value += spec.noise_sd * noise.next();
    out.push_back({spec.source_id, t, value});
  }
  return out;
}

// k-way merge by (timestamp, source_id); equal keys keep input stream order.
inline SampleStream merge_streams(const std::vector<SampleStream>& streams) {
  using Cursor = std::tuple<TimestampMs, std::string_view, std::size_t, std::size_t>;
  std::priority_queue<Cursor, std::vector<Cursor>, std::greater<>> heap;
  std::size_t total = 0;
  for (std::size_t k = 0; k < streams.size(); ++k) {
    total += streams[k].size();
    if (!streams[k].empty()) heap.emplace(streams[k][0].timestamp_ms, streams[k][0].source_id, k, 0);
  }
  SampleStream out;
  out.reserve(total);
  while (!heap.empty()) {
    auto [t, id, k, pos] = heap.top();
    heap.pop();
    out.push_back(streams[k][pos]);
    if (pos + 1 < streams[k].size()) {
      const auto& next = streams[k][pos + 1];
      heap.emplace(next.timestamp_ms, next.source_id, k, pos + 1);
    }
  }
  return out;
}

}  // namespace ge
