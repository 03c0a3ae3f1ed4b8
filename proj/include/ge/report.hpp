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

// Session summary derived from a transcript.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ge/error.hpp"
#include "ge/json_codec.hpp"
#include "ge/transcript.hpp"

namespace ge {

// Throws Error(kParse) unless the transcript starts with session_start and
// contains an end_session action.
inline Json summarize_transcript(const Transcript& transcript) {
  const auto& entries = transcript.entries();
  if (entries.empty() || entries.front().type() != "session_start")
    throw Error(Errc::kParse, "transcript does not start with session_start");

  std::optional<int> system_level, initial_level, final_level;
  std::vector<std::string> features;
  std::map<std::string, int> reactions;
  std::map<std::string, Json> strategies;
  int unattributed = 0;
  std::vector<std::string> contested;
  Json counterfactuals = Json::array();
  std::map<std::string, int> paths{{"service", 0}, {"fallback", 0}};
  Phase phase;
  bool ended = false;

  for (const auto& e : entries) {
    const auto type = e.type();
    const auto& p = e.payload;
    try {
      if (e.kind == EntryKind::kPhaseChange) {
        phase = p.at("to").get<Phase>();
      } else if (e.kind == EntryKind::kEvent && type == "reaction") {
        const auto& f = p.at("reaction").at("feature_id");
        if (f.is_null())
          ++unattributed;
        else
          ++reactions[f.get<std::string>()];
      } else if (e.kind == EntryKind::kEvent && type == "user_reply" && p.at("kind") == "disagree" &&
                 phase.kind == PhaseKind::kAgreement) {
        contested.push_back(phase.feature_id);
      } else if (e.kind == EntryKind::kAction && type == "record" && p.at("note") == "risk_decision") {
        system_level = p.at("data").at("level").get<int>();
        for (const auto& c : p.at("data").at("contributions")) features.push_back(c.at("feature_id").get<std::string>());
      } else if (e.kind == EntryKind::kAction && type == "record" && p.at("note") == "initial_assessment") {
        initial_level = p.at("data").at("self_level").get<int>();
      } else if (e.kind == EntryKind::kAction && type == "say" && !p.at("utterance").at("strategy").is_null()) {
        strategies[p.at("utterance").at("feature_id").get<std::string>()].push_back(p.at("utterance").at("strategy"));
        if (p.at("path").is_string()) ++paths[p.at("path").get<std::string>()];
      } else if (e.kind == EntryKind::kAction && type == "present_counterfactual") {
        counterfactuals.push_back({{"excluded", p.at("decision").at("excluded")},
                                   {"level", p.at("decision").at("level")},
                                   {"score", p.at("decision").at("score")}});
      } else if (e.kind == EntryKind::kAction && type == "end_session") {
        final_level = p.at("final_level").get<int>();
        ended = true;
      }
    } catch (const Json::exception& ex) {
      throw Error(Errc::kParse, "malformed entry seq " + std::to_string(e.seq) + ": " + ex.what());
    }
  }
  if (!ended) throw Error(Errc::kParse, "transcript has no end_session (last seq " + std::to_string(entries.back().seq) + ")");

  Json reaction_counts = Json::object();
  Json strategy_lists = Json::object();
  for (const auto& f : features) {
    reaction_counts[f] = reactions.count(f) ? reactions[f] : 0;
    strategy_lists[f] = strategies.count(f) ? strategies[f] : Json::array();
  }
  auto opt = [](const std::optional<int>& v) { return v ? Json(*v) : Json(); };
  return Json{{"session_id", entries.front().payload.value("session_id", "")},
              {"system_level", opt(system_level)},
              {"initial_self_assessment", opt(initial_level)},
              {"final_decision", opt(final_level)},
              {"contested", contested},
              {"reaction_counts", reaction_counts},
              {"unattributed_reactions", unattributed},
              {"strategies", strategy_lists},
              {"dialog_paths", paths},
              {"counterfactuals", counterfactuals}};
}

}  // namespace ge
