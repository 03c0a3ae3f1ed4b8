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

// JSON encodings of the domain value types shared by transcripts, the wire
// protocol and the CLI.

#pragma once

#include <string>

#include "json.hpp"

#include "ge/detector.hpp"
#include "ge/dialog.hpp"
#include "ge/error.hpp"
#include "ge/phase_types.hpp"
#include "ge/risk.hpp"

namespace ge {

using Json = nlohmann::json;

inline void to_json(Json& j, const FeatureContribution& c) {
  j = Json{{"feature_id", c.feature_id}, {"label", c.label},       {"option_id", c.option_id},
           {"weight", c.weight},         {"tendency", c.tendency}, {"contribution", c.contribution}};
}

inline void from_json(const Json& j, FeatureContribution& c) {
  j.at("feature_id").get_to(c.feature_id);
  j.at("label").get_to(c.label);
  j.at("option_id").get_to(c.option_id);
  j.at("weight").get_to(c.weight);
  j.at("tendency").get_to(c.tendency);
  j.at("contribution").get_to(c.contribution);
}

inline void to_json(Json& j, const RiskDecision& d) {
  j = Json{{"score", d.score}, {"level", d.level}, {"contributions", d.contributions}, {"excluded", d.excluded}};
}

inline void from_json(const Json& j, RiskDecision& d) {
  j.at("score").get_to(d.score);
  j.at("level").get_to(d.level);
  j.at("contributions").get_to(d.contributions);
  j.at("excluded").get_to(d.excluded);
}

inline void to_json(Json& j, const AnomalyEvent& a) {
  j = Json{{"source_id", a.source_id}, {"timestamp_ms", a.timestamp_ms}, {"z", a.z_score}, {"value", a.sample_value}};
}

inline void from_json(const Json& j, AnomalyEvent& a) {
  j.at("source_id").get_to(a.source_id);
  j.at("timestamp_ms").get_to(a.timestamp_ms);
  j.at("z").get_to(a.z_score);
  j.at("value").get_to(a.sample_value);
}

inline void to_json(Json& j, const ReactionEvent& r) {
  j = Json{{"timestamp_ms", r.timestamp_ms},
           {"contributing", r.contributing},
           {"feature_id", r.feature_id ? Json(*r.feature_id) : Json()}};
}

inline void from_json(const Json& j, ReactionEvent& r) {
  j.at("timestamp_ms").get_to(r.timestamp_ms);
  j.at("contributing").get_to(r.contributing);
  if (j.contains("feature_id") && !j.at("feature_id").is_null())
    r.feature_id = j.at("feature_id").get<std::string>();
  else
    r.feature_id.reset();
}

inline void to_json(Json& j, const Phase& p) {
  j = Json{{"phase", std::string(to_string(p.kind))}};
  if (p.has_feature()) j["feature_id"] = p.feature_id;
  if (p.kind == PhaseKind::kUnderstanding) j["attempt"] = p.attempt;
}

inline void from_json(const Json& j, Phase& p) {
  auto kind = parse_phase_kind(j.at("phase").get<std::string>());
  if (!kind) throw Error(Errc::kParse, "unknown phase '" + j.at("phase").get<std::string>() + "'");
  p.kind = *kind;
  p.feature_id = j.value("feature_id", std::string());
  p.attempt = j.value("attempt", 0);
}

inline void to_json(Json& j, const Utterance& u) {
  j = Json{{"speaker", std::string(to_string(u.speaker))}, {"text", u.text}, {"phase", u.phase},
           {"timestamp_ms", u.timestamp_ms}};
  j["feature_id"] = u.feature_id ? Json(*u.feature_id) : Json();
  j["strategy"] = u.strategy ? Json(std::string(to_string(*u.strategy))) : Json();
}

// {"source_id", "baseline", "noise_sd", "rate_hz", "duration_ms",
//  "bursts": [{"start_ms", "duration_ms", "delta"}], "seed"}
inline SynthSpec parse_synth_spec(const Json& j) {
  SynthSpec s;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k != "source_id" && k != "baseline" && k != "noise_sd" && k != "rate_hz" && k != "duration_ms" &&
          k != "bursts" && k != "seed")
        throw Error(Errc::kParse, "unknown synth field '" + k + "'");
    }
    s.source_id = j.value("source_id", s.source_id);
    s.baseline = j.at("baseline").get<double>();
    s.noise_sd = j.value("noise_sd", 0.0);
    s.rate_hz = j.value("rate_hz", s.rate_hz);
    s.duration_ms = j.at("duration_ms").get<TimestampMs>();
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("bursts"))
      for (const auto& b : j.at("bursts"))
        s.bursts.push_back({b.at("start_ms").get<TimestampMs>(), b.at("duration_ms").get<TimestampMs>(),
                            b.at("delta").get<double>()});
  } catch (const Json::exception& e) {
    throw Error(Errc::kParse, std::string("synth spec: ") + e.what());
  }
  validate(s);
  return s;
}

}  // namespace ge
