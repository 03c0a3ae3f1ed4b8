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

// Wire protocol (v1): message envelopes, inbound parsing and the mapping
// from transcript entries to outbound messages.

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ge/error.hpp"
#include "ge/json_codec.hpp"
#include "ge/phase.hpp"
#include "ge/signal.hpp"
#include "ge/transcript.hpp"

namespace ge {

inline constexpr int kProtocolVersion = 1;

struct StartRequest {
  std::optional<std::string> session_id;
};
struct SampleInput {
  SignalSample sample;
};
struct PresentationAck {
  std::string feature_id;
};

using InboundBody = std::variant<StartRequest, SessionEvent, SampleInput, PresentationAck>;

struct Inbound {
  std::string type;
  std::string session_id;
  std::optional<TimestampMs> timestamp_ms;
  InboundBody body;
};

namespace protocol_detail {

[[noreturn]] inline void bad(const std::string& why) { throw Error(Errc::kParse, why); }

inline void allow_keys(const Json& payload, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : payload.items()) {
    bool ok = k == "v";
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) bad("unknown payload field '" + k + "'");
  }
}

inline const Json& field(const Json& payload, const char* key) {
  if (!payload.contains(key)) bad(std::string("missing payload field '") + key + "'");
  return payload.at(key);
}

inline std::string string_field(const Json& payload, const char* key) {
  const auto& v = field(payload, key);
  if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

inline int level_field(const Json& payload, const char* key) {
  const auto& v = field(payload, key);
  if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace protocol_detail

// Parses one inbound message. Without a timestamp the body carries the
// placeholder time 0; callers decide how to stamp it. Throws Error(kParse).
inline Inbound parse_inbound(const Json& msg) {
  using namespace protocol_detail;
  if (!msg.is_object()) bad("message must be a JSON object");
  for (const auto& [k, v] : msg.items())
    if (k != "type" && k != "session_id" && k != "timestamp_ms" && k != "payload") bad("unknown envelope field '" + k + "'");
  if (!msg.contains("type") || !msg["type"].is_string()) bad("missing message type");

  Inbound in;
  in.type = msg["type"].get<std::string>();
  if (msg.contains("session_id")) {
    if (!msg["session_id"].is_string()) bad("session_id must be a string");
    in.session_id = msg["session_id"].get<std::string>();
  }
  if (msg.contains("timestamp_ms") && !msg["timestamp_ms"].is_null()) {
    if (!msg["timestamp_ms"].is_number_integer() || msg["timestamp_ms"].get<TimestampMs>() < 0)
      bad("timestamp_ms must be a non-negative integer");
    in.timestamp_ms = msg["timestamp_ms"].get<TimestampMs>();
  }
  const Json payload = msg.contains("payload") ? msg["payload"] : Json::object();
  if (!payload.is_object()) bad("payload must be an object");
  if (payload.contains("v") && payload["v"] != kProtocolVersion) bad("unsupported payload version");
  const TimestampMs t = in.timestamp_ms.value_or(0);

  if (in.type == "session.start") {
    allow_keys(payload, {"session_id"});
    StartRequest start;
    if (payload.contains("session_id")) start.session_id = string_field(payload, "session_id");
    in.body = start;
  } else if (in.type == "answer") {
    allow_keys(payload, {"answers"});
    const auto& answers = field(payload, "answers");
    if (!answers.is_object()) bad("'answers' must be an object");
    AnswersSubmitted a;
    for (const auto& [qid, oid] : answers.items()) {
      if (!oid.is_string()) bad("answer for '" + qid + "' must be an option_id string");
      a.answers[qid] = oid.get<std::string>();
    }
    in.body = SessionEvent{t, std::move(a)};
  } else if (in.type == "initial_assessment") {
    allow_keys(payload, {"level"});
    in.body = SessionEvent{t, InitialAssessmentGiven{level_field(payload, "level")}};
  } else if (in.type == "signal.sample") {
    allow_keys(payload, {"source_id", "value"});
    const auto& value = field(payload, "value");
    if (!value.is_number()) bad("'value' must be a number");
    in.body = SampleInput{SignalSample{string_field(payload, "source_id"), t, value.get<double>()}};
  } else if (in.type == "user.reply") {
    allow_keys(payload, {"kind", "free_text", "feature_id", "level"});
    auto kind = parse_reply_kind(string_field(payload, "kind"));
    if (!kind) bad("unknown reply kind '" + payload["kind"].get<std::string>() + "'");
    UserReply reply{*kind, payload.contains("free_text") ? string_field(payload, "free_text") : std::string(), 0};
    if (*kind == ReplyKind::kFinalDecision) reply.level = level_field(payload, "level");
    if (*kind == ReplyKind::kProblem && payload.contains("feature_id"))
      in.body = SessionEvent{t, UserClarificationRequest{string_field(payload, "feature_id")}};
    else
      in.body = SessionEvent{t, std::move(reply)};
  } else if (in.type == "final.decision") {
    allow_keys(payload, {"level", "free_text"});
    UserReply reply{ReplyKind::kFinalDecision,
                    payload.contains("free_text") ? string_field(payload, "free_text") : std::string(),
                    level_field(payload, "level")};
    in.body = SessionEvent{t, std::move(reply)};
  } else if (in.type == "explanation.present") {
    allow_keys(payload, {"feature_id"});
    in.body = PresentationAck{string_field(payload, "feature_id")};
  } else {
    bad("unsupported inbound message type '" + in.type + "'");
  }
  return in;
}

// Re-stamps every time-bearing part of an inbound body.
inline void stamp(Inbound& in, TimestampMs t) {
  in.timestamp_ms = t;
  if (auto* e = std::get_if<SessionEvent>(&in.body)) e->timestamp_ms = t;
  if (auto* s = std::get_if<SampleInput>(&in.body)) s->sample.timestamp_ms = t;
}

inline Json wire_message(const std::string& type, const std::string& session_id, TimestampMs t, Json payload) {
  payload["v"] = kProtocolVersion;
  return Json{{"type", type}, {"session_id", session_id}, {"timestamp_ms", t}, {"payload", std::move(payload)}};
}

inline Json entry_json(const TranscriptEntry& e) {
  return Json{{"seq", e.seq}, {"timestamp_ms", e.timestamp_ms}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
}

inline TranscriptEntry entry_from_wire(const Json& message) {
  const auto& entry = message.at("payload").at("entry");
  return parse_entry(entry.dump());
}

// Outbound messages for one transcript entry: the action- or event-specific
// message, if any, followed by `transcript.entry`.
inline std::vector<Json> outbound_messages(const TranscriptEntry& e, const std::string& session_id) {
  std::vector<Json> out;
  const auto t = e.timestamp_ms;
  const std::string type = e.type();
  const Json& p = e.payload;
  auto feature_text = [&](Json extra = Json::object()) {
    extra["feature_id"] = p.at("feature_id");
    extra["text"] = p.at("text");
    return extra;
  };
  if (e.kind == EntryKind::kAction) {
    if (type == "ask") {
      out.push_back(wire_message("question", session_id, t,
                                 {{"prompt_id", p["prompt_id"]}, {"text", p["text"]}, {"options", p["options"]}}));
    } else if (type == "present_feature") {
      out.push_back(wire_message("explanation.present", session_id, t, feature_text()));
    } else if (type == "say") {
      const auto& u = p.at("utterance");
      out.push_back(wire_message("clarify.prompt", session_id, t,
                                 {{"kind", u["strategy"].is_null() ? "statement" : "clarification"},
                                  {"feature_id", u["feature_id"]},
                                  {"text", u["text"]},
                                  {"strategy", u["strategy"]},
                                  {"path", p["path"]}}));
    } else if (type == "ask_problem_question") {
      out.push_back(wire_message("clarify.prompt", session_id, t, feature_text({{"kind", "problem"}})));
    } else if (type == "ask_understanding") {
      out.push_back(wire_message("clarify.prompt", session_id, t, feature_text({{"kind", "understanding"}})));
    } else if (type == "ask_agreement") {
      out.push_back(wire_message("agreement.prompt", session_id, t, feature_text()));
    } else if (type == "present_counterfactual") {
      out.push_back(wire_message("counterfactual.result", session_id, t,
                                 {{"decision", p["decision"]}, {"original_level", p["original_level"]},
                                  {"level", p["decision"]["level"]}, {"text", p["text"]}}));
    } else if (type == "request_final_decision") {
      out.push_back(wire_message("final.request", session_id, t,
                                 {{"original", p["original"]}, {"counterfactuals", p["counterfactuals"]},
                                  {"text", p["text"]}}));
    }
  } else if (e.kind == EntryKind::kEvent && type == "reaction") {
    out.push_back(wire_message("reaction.event", session_id, t, {{"reaction", p["reaction"]}}));
  }
  out.push_back(wire_message("transcript.entry", session_id, t, {{"entry", entry_json(e)}}));
  if (e.kind == EntryKind::kAction && type == "end_session")
    out.push_back(wire_message("session.end", session_id, t, {{"final_level", p["final_level"]}}));
  return out;
}

inline Json error_message(const std::string& session_id, TimestampMs t, const std::string& reason,
                          const std::string& in_reply_to) {
  return wire_message("error", session_id, t, {{"reason", reason}, {"in_reply_to", in_reply_to}});
}

}  // namespace ge
