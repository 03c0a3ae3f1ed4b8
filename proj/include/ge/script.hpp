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

// Scripted sessions: timed user events plus signal streams, folded through
// the session engine.

#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ge/config.hpp"
#include "ge/engine.hpp"
#include "ge/error.hpp"
#include "ge/protocol.hpp"
#include "ge/signal.hpp"
#include "ge/transcript.hpp"

namespace ge {

struct ScriptItem {
  TimestampMs at_ms = 0;
  Inbound input;
};

using Script = std::vector<ScriptItem>;

// A JSON array of {"at_ms": int, "event": <inbound wire message>}. Items are
// stably sorted by at_ms.
inline Script parse_script(const Json& doc) {
  if (!doc.is_array()) throw Error(Errc::kParse, "script must be a JSON array");
  Script script;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = "script[" + std::to_string(i) + "]";
    if (!item.is_object() || !item.contains("at_ms") || !item.contains("event"))
      throw Error(Errc::kParse, where + ": expected {at_ms, event}");
    for (const auto& [k, v] : item.items())
      if (k != "at_ms" && k != "event") throw Error(Errc::kParse, where + ": unknown field '" + k + "'");
    if (!item["at_ms"].is_number_integer() || item["at_ms"].get<TimestampMs>() < 0)
      throw Error(Errc::kParse, where + ": at_ms must be a non-negative integer");
    ScriptItem s;
    s.at_ms = item["at_ms"].get<TimestampMs>();
    try {
      s.input = parse_inbound(item["event"]);
    } catch (const Error& e) {
      throw Error(Errc::kParse, where + ": " + e.what());
    }
    if (std::holds_alternative<StartRequest>(s.input.body))
      throw Error(Errc::kParse, where + ": session.start is implicit in scripts");
    stamp(s.input, s.at_ms);
    script.push_back(std::move(s));
  }
  std::stable_sort(script.begin(), script.end(),
                   [](const ScriptItem& a, const ScriptItem& b) { return a.at_ms < b.at_ms; });
  return script;
}

inline Script load_script(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(Errc::kParse, path.string() + ": not valid JSON: " + e.what());
  }
  return parse_script(doc);
}

struct SessionOutcome {
  Transcript transcript;
  bool done = false;
};

// Feeds an engine in timestamp order: samples (stream merge order) before
// script items at equal times.
inline void feed(SessionEngine& engine, const SampleStream& samples, const Script& script) {
  std::size_t si = 0, ui = 0;
  while (si < samples.size() || ui < script.size()) {
    const bool take_sample =
        si < samples.size() && (ui >= script.size() || samples[si].timestamp_ms <= script[ui].at_ms);
    if (take_sample) {
      engine.push_sample(samples[si++]);
      continue;
    }
    const auto& item = script[ui++];
    std::visit(
        [&](const auto& body) {
          using B = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<B, SessionEvent>) {
            engine.push_user(body);
          } else if constexpr (std::is_same_v<B, SampleInput>) {
            engine.push_sample(body.sample);
          } else if constexpr (std::is_same_v<B, PresentationAck>) {
            engine.acknowledge_presentation(body.feature_id, item.at_ms);
          }
        },
        item.input.body);
  }
  engine.finish();
}

// Runs a whole session headlessly in timed presentation mode.
inline SessionOutcome run_session(const SessionConfig& config, const Script& script,
                                  const std::vector<SampleStream>& streams,
                                  std::shared_ptr<DialogClient> client = nullptr,
                                  const std::string& session_id = "simulated") {
  SessionEngine engine(config.rules(), EngineOptions::from(config), std::move(client), session_id);
  engine.start(0, Json{{"seed", config.seed}});
  feed(engine, merge_streams(streams), script);
  return {engine.transcript(), engine.done()};
}

// Streams for every configured source found in the given trace files.
inline std::vector<SampleStream> load_traces(const SessionConfig& config, const std::vector<std::string>& paths) {
  std::vector<SampleStream> streams;
  for (const auto& path : paths) {
    auto per_source = read_trace(path, config.sources, /*skip_unknown=*/false);
    for (auto& [id, stream] : per_source)
      if (!stream.empty()) streams.push_back(std::move(stream));
  }
  return streams;
}

}  // namespace ge
