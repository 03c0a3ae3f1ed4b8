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

#include <random>

#include "ge/detector.hpp"
#include "oracle.hpp"

namespace ge {
namespace {

TEST(ZScore, ConstantHistoryIsZero) {
  const std::vector<double> h = {5, 5, 5, 5};
  EXPECT_EQ(rolling_zscore(h, 5.0), 0.0);
  EXPECT_EQ(rolling_zscore(h, 50.0), 0.0);
}

TEST(ZScore, HandValues) {
  const std::vector<double> h = {60, 62, 58, 60};
  // mean 60, population sd sqrt(2)
  EXPECT_NEAR(rolling_zscore(h, 70.0), 10.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(rolling_zscore(h, 63.54), 3.54 / std::sqrt(2.0), 1e-12);
  EXPECT_GT(rolling_zscore(h, 63.54), 2.5);
  EXPECT_LT(rolling_zscore(h, 63.53), 2.5);
}

TEST(DetectorConfig, Validation) {
  DetectorConfig c;
  c.z_threshold = 0;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.detection_window_ms = c.baseline_span_ms + 1;
  EXPECT_THROW(validate(c), Error);
  EXPECT_NO_THROW(validate(DetectorConfig{}));
}

SampleStream stream_of(const std::vector<double>& values, TimestampMs step = 100) {
  SampleStream s;
  for (std::size_t i = 0; i < values.size(); ++i) s.push_back({"hr", static_cast<TimestampMs>(i) * step, values[i]});
  return s;
}

TEST(Detector, ConstantStreamNeverFires) {
  EXPECT_TRUE(detect_anomalies(stream_of(std::vector<double>(500, 72.0)), {}).empty());
}

TEST(Detector, WarmUpAbsorbsFirstSamples) {
  DetectorConfig c;
  c.min_baseline_samples = 4;
  // The spike is the 4th sample: still warm-up, so it joins the baseline.
  const auto a = detect_anomalies(stream_of({60, 61, 59, 200, 60}), c);
  EXPECT_TRUE(a.empty());
}

TEST(Detector, AnomaliesStayOutOfBaseline) {
  DetectorConfig c;
  c.min_baseline_samples = 4;
  const auto a = detect_anomalies(stream_of({60, 61, 59, 60, 90, 90, 90, 90}), c);
  ASSERT_EQ(a.size(), 4u);
  for (const auto& e : a) EXPECT_GE(e.z_score, c.z_threshold);
}

TEST(Detector, TwoSided) {
  DetectorConfig c;
  c.min_baseline_samples = 4;
  const auto a = detect_anomalies(stream_of({60, 61, 59, 60, 30}), c);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_LE(a[0].z_score, -c.z_threshold);
  EXPECT_EQ(a[0].sample_value, 30.0);
  EXPECT_EQ(a[0].timestamp_ms, 400);
}

TEST(Detector, BaselineSpanForgetsOldSamples) {
  DetectorConfig c;
  c.min_baseline_samples = 3;
  c.baseline_span_ms = 300;
  c.detection_window_ms = 100;
  // 300 is anomalous against {0, 1, -1}. From 400 on the span holds fewer
  // than 3 non-anomalous samples, so warm-up restarts and the new level is
  // absorbed.
  const auto a = detect_anomalies(stream_of({0, 1, -1, 100, 101, 99, 100, 100.5}), c);
  std::vector<TimestampMs> ts;
  for (const auto& e : a) ts.push_back(e.timestamp_ms);
  EXPECT_EQ(ts, (std::vector<TimestampMs>{300}));
}

TEST(Detector, RejectsNonIncreasingTime) {
  ZScoreDetector d("hr", {});
  d.push(10, 1);
  EXPECT_THROW(d.push(10, 1), Error);
}

TEST(Detector, SeedSevenFixtureHasFalseAlarms) {
  // Documents why the heart-rate fixture uses seed 5.
  SynthSpec s;
  s.baseline = 60;
  s.noise_sd = 0.5;
  s.rate_hz = 10;
  s.duration_ms = 14000;
  s.bursts = {{5000, 1000, 15}};
  for (std::uint64_t seed : {7, 5}) {
    s.seed = seed;
    const auto stream = synth_trace(s);
    std::vector<std::int64_t> t;
    std::vector<double> x;
    for (const auto& v : stream) {
      t.push_back(v.timestamp_ms);
      x.push_back(v.value);
    }
    const auto oracle = ge_test::oracle_detect(t, x, {});
    const auto got = detect_anomalies(stream, {});
    ASSERT_EQ(oracle.size(), got.size());
    bool outside = false;
    for (const auto& e : got) outside = outside || e.timestamp_ms < 5000 || e.timestamp_ms >= 6000;
    EXPECT_EQ(outside, seed == 7);
    if (seed == 5) {
      EXPECT_EQ(got.front().timestamp_ms, 5000);
    }
  }
}

TEST(Detector, MatchesOracleOnRandomStreams) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    DetectorConfig c;
    c.min_baseline_samples = 2 + rng() % 8;
    c.baseline_span_ms = 500 + static_cast<TimestampMs>(rng() % 5000);
    c.detection_window_ms = 100;
    SampleStream s;
    TimestampMs t = 0;
    for (int i = 0; i < 800; ++i) {
      t += 1 + static_cast<TimestampMs>(rng() % 200);
      s.push_back({"x", t, 10 * g(rng) + (rng() % 50 == 0 ? 100.0 : 0.0)});
    }
    std::vector<std::int64_t> ts;
    std::vector<double> xs;
    for (const auto& v : s) {
      ts.push_back(v.timestamp_ms);
      xs.push_back(v.value);
    }
    const auto oracle = ge_test::oracle_detect(ts, xs, {c.z_threshold, c.baseline_span_ms, c.min_baseline_samples, c.epsilon_sd});
    const auto got = detect_anomalies(s, c);
    ASSERT_EQ(oracle.size(), got.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(oracle[i].t, got[i].timestamp_ms);
      EXPECT_NEAR(oracle[i].z, got[i].z_score, 1e-9);
    }
  }
}

TEST(Detector, MergedKeepsSourcesApart) {
  SampleStream hr = stream_of({60, 61, 59, 60, 61, 59, 95});
  SampleStream face;
  for (int i = 0; i < 7; ++i) face.push_back({"face", i * 100 + 50, i % 2 ? 0.1 : 0.11});
  const auto a = detect_merged(merge_streams({hr, face}), {});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].source_id, "hr");
}

AnomalyEvent anomaly(TimestampMs t, const std::string& source = "hr") { return {source, t, 3.0, 0.0}; }

TEST(Fuser, Singleton) {
  const auto r = fuse_reactions({anomaly(1000)}, {});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].timestamp_ms, 1000);
  EXPECT_EQ(r[0].contributing.size(), 1u);
}

TEST(Fuser, SameWindowAcrossSources) {
  const auto r = fuse_reactions({anomaly(1000, "hr"), anomaly(1300, "face")}, {});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].contributing.size(), 2u);
}

TEST(Fuser, WindowIsHalfOpen) {
  const auto r = fuse_reactions({anomaly(1000), anomaly(1499), anomaly(1500)}, {});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].contributing.size(), 2u);
}

TEST(Fuser, Refractory) {
  EXPECT_EQ(fuse_reactions({anomaly(1000), anomaly(2500)}, {}).size(), 1u);
  const auto two = fuse_reactions({anomaly(1000), anomaly(3500)}, {});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_GE(two[1].timestamp_ms - two[0].timestamp_ms, DetectorConfig{}.refractory_ms);
  EXPECT_EQ(fuse_reactions({anomaly(1000), anomaly(3000)}, {}).size(), 2u);
}

TEST(Fuser, SuppressedAreReported) {
  ReactionFuser f({});
  EXPECT_EQ(f.push(anomaly(1000)), ReactionFuser::Outcome::kOpened);
  EXPECT_EQ(f.push(anomaly(1200)), ReactionFuser::Outcome::kJoined);
  EXPECT_FALSE(f.due(1499));
  EXPECT_TRUE(f.due(1500));
  EXPECT_EQ(f.push(anomaly(1800)), ReactionFuser::Outcome::kSuppressed);
  EXPECT_EQ(f.push(anomaly(3000)), ReactionFuser::Outcome::kOpened);
}

TEST(Fuser, ContextLabelsFeature) {
  const auto r = fuse_reactions({anomaly(1000), anomaly(5000)}, {},
                                [](TimestampMs t) -> std::optional<std::string> {
                                  if (t < 2000) return "gender";
                                  return std::nullopt;
                                });
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].feature_id, std::optional<std::string>("gender"));
  EXPECT_EQ(r[1].feature_id, std::nullopt);
}

}  // namespace
}  // namespace ge
