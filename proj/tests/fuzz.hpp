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

// Randomized scripted sessions and the grammar checks every transcript must
// satisfy. Shared by the phase tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ge/ge.hpp"

namespace ge_test {

// Stub dialog service: answers, declines or stays silent at random.
class StubDialogClient : public ge::DialogClient {
 public:
  explicit StubDialogClient(std::uint64_t seed) : rng_(seed) {}
  std::optional<std::string> complete(const ge::DialogRequest& request) override {
    switch (rng_() % 3) {
      case 0: return std::nullopt;
      case 1: return std::string();
      default: return "service text for " + request.feature_id;
    }
  }

 private:
  std::mt19937_64 rng_;
};

struct FuzzCase {
  ge::SessionConfig config;
  ge::Script script;
  std::vector<ge::SampleStream> streams;
  std::shared_ptr<ge::DialogClient> client;
  std::vector<std::string> features;
};

inline FuzzCase make_fuzz_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return static_cast<int>(lo + rng() % static_cast<std::uint64_t>(hi - lo + 1)); };

  FuzzCase fc;
  const int n = pick(1, 8);
  ge::Json answers = ge::Json::object();
  for (int i = 0; i < n; ++i) {
    ge::Question q;
    q.question_id = "f" + std::to_string(i);
    q.text = "question " + std::to_string(i);
    q.label = "feature " + std::to_string(i);
    const int options = pick(2, 3);
    for (int o = 0; o < options; ++o)
      q.options.push_back({"o" + std::to_string(o), "option " + std::to_string(o), pick(-4, 4) / 4.0});
    answers[q.question_id] = q.options[static_cast<std::size_t>(pick(0, options - 1))].option_id;
    fc.config.questionnaire.weights[q.question_id] = std::array{0.0, 0.5, 1.0, 2.0}[static_cast<std::size_t>(pick(0, 3))];
    fc.features.push_back(q.question_id);
    fc.config.questionnaire.questions.push_back(std::move(q));
  }
  fc.config.sources = {ge::default_descriptor("hr", ge::SourceKind::kHeartRateBpm)};
  fc.config.presentation_ms = pick(5, 30) * 100;
  fc.config.dwell_ms = pick(0, 10) * 100;
  fc.config.seed = seed;
  if (rng() % 2) {
    fc.config.dialog_service_url = "http://stub.invalid";
    fc.client = std::make_shared<StubDialogClient>(seed ^ 0x9e3779b97f4a7c15ULL);
  }

  // Heart rate with a few bursts at random places.
  const ge::TimestampMs span = pick(5, 40) * 1000;
  ge::SynthSpec spec;
  spec.baseline = 60;
  spec.noise_sd = 0.5;
  spec.rate_hz = 10;
  spec.duration_ms = span;
  spec.seed = seed;
  for (int b = pick(0, 4); b > 0; --b)
    spec.bursts.push_back({pick(10, static_cast<int>(span / 100) - 8) * 100, pick(1, 8) * 100, pick(0, 1) ? 15.0 : -15.0});
  fc.streams.push_back(ge::synth_trace(spec));

  // Random user traffic, some of it malformed for the phase it lands in.
  ge::Json script = ge::Json::array();
  auto add = [&](ge::TimestampMs t, const std::string& type, ge::Json payload) {
    script.push_back({{"at_ms", t}, {"event", {{"type", type}, {"payload", std::move(payload)}}}});
  };
  const char* kinds[] = {"no_problem", "problem", "understood", "not_understood", "agree", "disagree"};
  if (rng() % 4 == 0) add(50, "answer", {{"answers", ge::Json::object()}});
  add(100, "answer", {{"answers", answers}});
  if (rng() % 4 == 0) add(150, "initial_assessment", {{"level", 0}});
  add(200, "initial_assessment", {{"level", pick(1, 5)}});
  for (int e = pick(0, 40); e > 0; --e) {
    const ge::TimestampMs t = pick(0, static_cast<int>(span));
    switch (pick(0, 5)) {
      case 0: add(t, "user.reply", {{"kind", "problem"}, {"feature_id", "f" + std::to_string(pick(0, 8))}}); break;
      case 1: add(t, "final.decision", {{"level", pick(0, 6)}}); break;
      case 2: add(t, "answer", {{"answers", answers}}); break;
      default: add(t, "user.reply", {{"kind", kinds[pick(0, 5)]}}); break;
    }
  }
  // A stubborn user who exhausts the clarification ladder.
  if (rng() % 3 == 0) {
    const ge::TimestampMs t = pick(300, static_cast<int>(span));
    add(t, "user.reply", {{"kind", "problem"}, {"feature_id", "f" + std::to_string(pick(0, n - 1))}});
    for (int k = 1; k <= 5; ++k) add(t + k, "user.reply", {{"kind", "not_understood"}});
  }
  // Tail that always lets the session finish.
  ge::TimestampMs t = span + 10;
  for (int i = 0; i < n + 2; ++i) {
    add(t, "user.reply", {{"kind", "understood"}});
    add(t + 1, "user.reply", {{"kind", "agree"}});
    add(t + 2, "final.decision", {{"level", pick(1, 5)}});
    t += fc.config.presentation_ms + fc.config.dwell_ms + 10;
  }
  fc.script = ge::parse_script(script);
  return fc;
}

inline ge::SessionOutcome run_fuzz_case(const FuzzCase& fc) {
  return ge::run_session(fc.config, fc.script, fc.streams, fc.client);
}

inline const std::vector<std::string>& strategy_ladder() {
  static const std::vector<std::string> ladder = {"repeat", "rephrase", "contrast", "change_focus"};
  return ladder;
}

// Empty string when every grammar and ladder property holds.
inline std::string check_grammar(const ge::Transcript& transcript, const std::vector<std::string>& features,
                                 bool require_done = true) {
  using ge::Json;
  auto phase_name = [](const Json& p) { return p.is_null() ? std::string("null") : p.at("phase").get<std::string>(); };
  auto phase_feature = [](const Json& p) { return p.is_object() && p.contains("feature_id") ? p["feature_id"].get<std::string>() : std::string(); };

  Json phase;  // null before the first change
  Json last_event;
  std::map<std::string, int> presented, p2_entries;
  std::map<std::string, std::vector<std::string>> strategies;
  std::set<std::string> been_in_p2;
  int p0 = 0, p4 = 0, done = 0;
  int end_sessions = 0;
  Json previous_phase;
  const auto& entries = transcript.entries();
  for (const auto& e : entries) {
    const Json& p = e.payload;
    const std::string where = " at seq " + std::to_string(e.seq);
    if (e.kind == ge::EntryKind::kEvent) {
      last_event = p;
      continue;
    }
    if (e.kind == ge::EntryKind::kAction) {
      const std::string type = p.at("type");
      if (type == "record" && p.at("note") == "failed") return "step failed" + where;
      if (type == "end_session") ++end_sessions;
      if (type == "present_feature") ++presented[p.at("feature_id").get<std::string>()];
      if (type == "say" && !p.at("utterance").at("strategy").is_null()) {
        const std::string f = p["utterance"]["feature_id"];
        auto& seq = strategies[f];
        seq.push_back(p["utterance"]["strategy"]);
        if (seq.size() > 4 || seq.back() != strategy_ladder()[seq.size() - 1])
          return "strategy sequence for " + f + " is not a ladder prefix" + where;
        if (phase_name(phase) != "P2_Understanding" || phase_feature(phase) != f)
          return "strategy outside P2 of its feature" + where;
      }
      if (type == "record" && p.at("note") == "grounding" && p["data"]["level"] == "UnderstoodWithReservation") {
        const std::string f = p["data"]["feature_id"];
        if (strategies[f].size() != 4) return "reservation before the ladder was exhausted" + where;
        // The phase change is written before the actions of the same step.
        if (phase_name(phase) != "P3_Agreement" || phase_feature(phase) != f ||
            phase_name(previous_phase) != "P2_Understanding" || phase_feature(previous_phase) != f)
          return "reservation not followed by P3" + where;
      }
      continue;
    }
    // phase_change
    const Json& from = p.at("from");
    const Json& to = p.at("to");
    if (phase_name(from) != phase_name(phase) || phase_feature(from) != phase_feature(phase)) return "phase_change.from does not match the current phase" + where;
    const std::string name = phase_name(to);
    const std::string f = phase_feature(to);
    if (name == "P0_Assessment") {
      if (!from.is_null() || ++p0 > 1) return "P0 is not first or repeats" + where;
    } else if (from.is_null()) {
      return "first phase is not P0" + where;
    }
    if (name == "P2_Understanding" && !(phase_name(from) == "P2_Understanding" && phase_feature(from) == f)) {
      const std::string ev = last_event.is_object() ? last_event.value("type", "") : "";
      bool ok = false;
      if (ev == "reaction") ok = last_event["reaction"]["feature_id"] == f;
      if (ev == "user_clarification_request") ok = last_event["feature_id"] == f;
      if (ev == "user_reply")
        ok = last_event["kind"] == "problem" && phase_name(from) == "P1_Explain" && phase_feature(from) == f;
      if (!ok) return "P2 for " + f + " without a reaction or clarification request" + where;
      if (++p2_entries[f] > 1) return "P2 entered twice for " + f + where;
      been_in_p2.insert(f);
    }
    if (name == "P3_Agreement" && !(phase_name(from) == "P2_Understanding" && phase_feature(from) == f))
      return "P3 for " + f + " not directly after P2" + where;
    if (name == "P4_FinalDecision" && ++p4 > 1) return "P4 entered twice" + where;
    if (name == "Done") {
      if (phase_name(from) != "P4_FinalDecision") return "Done not after P4" + where;
      if (++done > 1) return "Done entered twice" + where;
    }
    if (done && name != "Done") return "phase change after Done" + where;
    previous_phase = phase;
    phase = to;
  }
  if (p0 != 1) return "P0 missing";
  if (require_done) {
    if (p4 != 1 || done != 1) return "session did not reach P4 and Done";
    for (const auto& f : features)
      if (presented[f] != 1) return "feature " + f + " presented " + std::to_string(presented[f]) + " times";
  }
  for (const auto& [f, count] : presented)
    if (count > 1) return "feature " + f + " presented twice";
  if (require_done && end_sessions != 1) return "end_session emitted " + std::to_string(end_sessions) + " times";
  return {};
}

}  // namespace ge_test
