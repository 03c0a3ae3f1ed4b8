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

#include <gtest/gtest.h>

#include <sstream>

#include "ge/signal.hpp"

namespace ge {
namespace {

std::vector<SourceDescriptor> hr_only() { return {default_descriptor("hr", SourceKind::kHeartRateBpm)}; }

std::map<std::string, SampleStream> parse(const std::string& text, bool skip_unknown = false) {
  std::istringstream in(text);
  return parse_trace(in, hr_only(), skip_unknown, "test.csv");
}

Errc parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::kIo;
}

TEST(TraceParse, RowsInOrder) {
  auto streams = parse("timestamp_ms,source_id,value\n0,hr,62.0\n100,hr,63.1\n");
  const auto& hr = streams.at("hr");
  ASSERT_EQ(hr.size(), 2u);
  EXPECT_EQ(hr[0].timestamp_ms, 0);
  EXPECT_DOUBLE_EQ(hr[0].value, 62.0);
  EXPECT_EQ(hr[1].timestamp_ms, 100);
  EXPECT_DOUBLE_EQ(hr[1].value, 63.1);
}

TEST(TraceParse, RepeatedTimestampIsNonMonotonic) {
  EXPECT_EQ(parse_error("timestamp_ms,source_id,value\n0,hr,62.0\n0,hr,63.0\n"), Errc::kNonMonotonicTimestamp);
}

TEST(TraceParse, OutOfRangeHeartRate) {
  EXPECT_EQ(parse_error("timestamp_ms,source_id,value\n0,hr,400\n"), Errc::kOutOfRange);
}

TEST(TraceParse, UnknownSource) {
  EXPECT_EQ(parse_error("timestamp_ms,source_id,value\n0,gsr,1\n"), Errc::kUnknownSource);
  EXPECT_TRUE(parse("timestamp_ms,source_id,value\n0,gsr,1\n10,hr,70\n", true).at("hr").size() == 1);
}

TEST(TraceParse, MalformedRows) {
  EXPECT_EQ(parse_error("timestamp_ms,source_id,value\n0,hr\n"), Errc::kParse);
  EXPECT_EQ(parse_error("timestamp_ms,source_id,value\nx,hr,60\n"), Errc::kParse);
  EXPECT_EQ(parse_error("timestamp_ms,source_id,value\n0,hr,sixty\n"), Errc::kParse);
  EXPECT_EQ(parse_error("time,source,value\n0,hr,60\n"), Errc::kParse);
}

TEST(TraceParse, ErrorNamesFileAndLine) {
  try {
    parse("timestamp_ms,source_id,value\n0,hr,62\n100,hr,500\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("test.csv:3"), std::string::npos) << e.what();
  }
}

TEST(TraceFormat, RoundTrip) {
  SampleStream s = {{"hr", 0, 60.25}, {"hr", 100, 61.0 / 3.0 + 40}};
  std::istringstream in(format_trace(s));
  auto back = parse_trace(in, hr_only(), false, "rt");
  EXPECT_EQ(back.at("hr"), s);
}

TEST(Gate, CountsRejections) {
  SampleGate gate(hr_only());
  EXPECT_EQ(gate.check({"hr", 0, 60}), SampleGate::Verdict::kAccepted);
  EXPECT_EQ(gate.check({"hr", 0, 61}), SampleGate::Verdict::kNonMonotonic);
  EXPECT_EQ(gate.check({"hr", 10, 10}), SampleGate::Verdict::kOutOfRange);
  EXPECT_EQ(gate.check({"eeg", 10, 1}), SampleGate::Verdict::kUnknownSource);
  EXPECT_EQ(gate.check({"hr", 10, 61}), SampleGate::Verdict::kAccepted);
  EXPECT_EQ(gate.accepted(), 2u);
  EXPECT_EQ(gate.rejected(), 3u);
}

TEST(Descriptor, Validation) {
  auto d = default_descriptor("x", SourceKind::kExternalScalar);
  d.valid_range = {1, 1};
  EXPECT_THROW(validate(d), Error);
  d = default_descriptor("x", SourceKind::kExternalScalar);
  d.expected_rate_hz = 0;
  EXPECT_THROW(validate(d), Error);
  EXPECT_THROW(SampleGate({default_descriptor("a", SourceKind::kFacialArousal),
                           default_descriptor("a", SourceKind::kFacialArousal)}),
               Error);
}

TEST(Synth, ZeroNoiseFlat) {
  SynthSpec spec;
  spec.baseline = 60;
  spec.noise_sd = 0;
  spec.rate_hz = 10;
  spec.duration_ms = 1000;
  const auto s = synth_trace(spec);
  ASSERT_EQ(s.size(), 10u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].timestamp_ms, static_cast<TimestampMs>(i * 100));
    EXPECT_EQ(s[i].value, 60.0);
  }
}

TEST(Synth, BurstIsAdditive) {
  SynthSpec spec;
  spec.baseline = 60;
  spec.rate_hz = 100;
  spec.duration_ms = 1000;
  spec.bursts = {{500, 200, 15}};
  for (const auto& s : synth_trace(spec))
    EXPECT_EQ(s.value, (s.timestamp_ms >= 500 && s.timestamp_ms < 700) ? 75.0 : 60.0) << s.timestamp_ms;
}

TEST(Synth, OverlappingBurstsAdd) {
  SynthSpec spec;
  spec.baseline = 0;
  spec.rate_hz = 10;
  spec.duration_ms = 1000;
  spec.bursts = {{0, 500, 1}, {300, 500, 2}};
  const auto s = synth_trace(spec);
  EXPECT_EQ(s[2].value, 1.0);
  EXPECT_EQ(s[4].value, 3.0);
  EXPECT_EQ(s[6].value, 2.0);
}

TEST(Synth, SeededNoiseIsDeterministic) {
  SynthSpec spec;
  spec.baseline = 60;
  spec.noise_sd = 1.0;
  spec.rate_hz = 10;
  spec.duration_ms = 5000;
  spec.seed = 42;
  EXPECT_EQ(synth_trace(spec), synth_trace(spec));
  auto other = spec;
  other.seed = 43;
  EXPECT_NE(synth_trace(spec), synth_trace(other));
}

TEST(Synth, NoiseHasRequestedSpread) {
  SynthSpec spec;
  spec.baseline = 0;
  spec.noise_sd = 2.0;
  spec.rate_hz = 1000;
  spec.duration_ms = 200000;
  spec.seed = 1;
  double sum = 0, sq = 0;
  const auto s = synth_trace(spec);
  for (const auto& v : s) {
    sum += v.value;
    sq += v.value * v.value;
  }
  const double n = static_cast<double>(s.size());
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(std::sqrt(sq / n - (sum / n) * (sum / n)), 2.0, 0.05);
}

TEST(Synth, RejectsBadSpecs) {
  SynthSpec spec;
  spec.baseline = 0;
  spec.duration_ms = 1000;
  spec.rate_hz = 0;
  EXPECT_THROW(synth_trace(spec), Error);
  spec.rate_hz = 10;
  spec.noise_sd = -1;
  EXPECT_THROW(synth_trace(spec), Error);
  spec.noise_sd = 0;
  spec.bursts = {{900, 200, 1}};
  EXPECT_THROW(synth_trace(spec), Error);
}

TEST(Merge, KWayOrder) {
  SampleStream a = {{"a", 0, 1}, {"a", 100, 2}};
  SampleStream b = {{"b", 50, 3}};
  const auto m = merge_streams({a, b});
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0], a[0]);
  EXPECT_EQ(m[1], b[0]);
  EXPECT_EQ(m[2], a[1]);
}

TEST(Merge, TieBreaksOnSourceId) {
  SampleStream hr = {{"hr", 100, 60}};
  SampleStream face = {{"face", 100, 0.1}};
  const auto m = merge_streams({hr, face});
  EXPECT_EQ(m[0].source_id, "face");
  EXPECT_EQ(m[1].source_id, "hr");
}

TEST(Merge, EmptyStreamIsIdentity) {
  SampleStream a = {{"a", 0, 1}, {"a", 7, 2}};
  EXPECT_EQ(merge_streams({SampleStream{}, a}), a);
  EXPECT_TRUE(merge_streams({}).empty());
}

}  // namespace
}  // namespace ge
