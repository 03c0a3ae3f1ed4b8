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

// Append-only session transcript and its JSON Lines persistence.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ge/error.hpp"
#include "ge/json_codec.hpp"
#include "ge/phase.hpp"

namespace ge {

// ---------------------------------------------------------------------------
// Event and action payloads

inline Json event_payload(const SessionEvent& event) {
  return std::visit(
      [](const auto& e) -> Json {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, AnswersSubmitted>) {
          return {{"type", "answers_submitted"}, {"answers", e.answers}};
        } else if constexpr (std::is_same_v<E, InitialAssessmentGiven>) {
          return {{"type", "initial_assessment_given"}, {"level", e.level}};
        } else if constexpr (std::is_same_v<E, PresentationComplete>) {
          return {{"type", "presentation_complete"}, {"feature_id", e.feature_id}};
        } else if constexpr (std::is_same_v<E, Reaction>) {
          return {{"type", "reaction"}, {"reaction", e.reaction}};
        } else if constexpr (std::is_same_v<E, UserClarificationRequest>) {
          return {{"type", "user_clarification_request"}, {"feature_id", e.feature_id}};
        } else if constexpr (std::is_same_v<E, UserReply>) {
          Json j{{"type", "user_reply"}, {"kind", to_string(e.kind)}, {"free_text", e.free_text}};
          if (e.kind == ReplyKind::kFinalDecision) j["level"] = e.level;
          return j;
        } else if constexpr (std::is_same_v<E, DialogServiceReply>) {
          return {{"type", "dialog_service_reply"}, {"ok", e.text.has_value()},
                  {"text", e.text ? Json(*e.text) : Json()}};
        } else {
          return {{"type", "timeout"}, {"token", e.token}};
        }
      },
      event.body);
}

inline Json action_payload(const Action& action) {
  auto feature_text = [](const char* type, const std::string& feature_id, const std::string& text) {
    return Json{{"type", type}, {"feature_id", feature_id}, {"text", text}};
  };
  return std::visit(
      [&](const auto& a) -> Json {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, Ask>) {
          Json options = Json::array();
          for (const auto& [id, label] : a.prompt.options) options.push_back({{"id", id}, {"label", label}});
          return {{"type", "ask"}, {"prompt_id", a.prompt.prompt_id}, {"text", a.prompt.text}, {"options", options}};
        } else if constexpr (std::is_same_v<A, PresentFeature>) {
          return feature_text("present_feature", a.feature_id, a.text);
        } else if constexpr (std::is_same_v<A, Say>) {
          return {{"type", "say"},
                  {"utterance", a.utterance},
                  {"path", a.path ? Json(std::string(to_string(*a.path))) : Json()}};
        } else if constexpr (std::is_same_v<A, AskProblemQuestion>) {
          return feature_text("ask_problem_question", a.feature_id, a.text);
        } else if constexpr (std::is_same_v<A, AskUnderstanding>) {
          return feature_text("ask_understanding", a.feature_id, a.text);
        } else if constexpr (std::is_same_v<A, AskAgreement>) {
          return feature_text("ask_agreement", a.feature_id, a.text);
        } else if constexpr (std::is_same_v<A, PresentCounterfactual>) {
          return {{"type", "present_counterfactual"},
                  {"decision", a.decision},
                  {"original_level", a.original_level},
                  {"text", a.text}};
        } else if constexpr (std::is_same_v<A, RequestFinalDecision>) {
          return {{"type", "request_final_decision"},
                  {"original", a.original},
                  {"counterfactuals", a.counterfactuals},
                  {"text", a.text}};
        } else if constexpr (std::is_same_v<A, RequestClarification>) {
          return {{"type", "request_clarification"}, {"request", a.request.to_json()}};
        } else if constexpr (std::is_same_v<A, Record>) {
          return {{"type", "record"}, {"note", a.note}, {"data", a.data}};
        } else {
          return {{"type", "end_session"}, {"final_level", a.final_level}};
        }
      },
      action);
}

// ---------------------------------------------------------------------------
// Transcript

enum class EntryKind { kEvent, kAction, kPhaseChange };

constexpr std::string_view to_string(EntryKind k) {
  switch (k) {
    case EntryKind::kEvent: return "event";
    case EntryKind::kAction: return "action";
    case EntryKind::kPhaseChange: return "phase_change";
  }
  return "?";
}

inline std::optional<EntryKind> parse_entry_kind(std::string_view s) {
  for (auto k : {EntryKind::kEvent, EntryKind::kAction, EntryKind::kPhaseChange})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct TranscriptEntry {
  std::int64_t seq = 0;
  TimestampMs timestamp_ms = 0;
  EntryKind kind = EntryKind::kEvent;
  Json payload;

  std::string type() const { return payload.is_object() ? payload.value("type", std::string()) : std::string(); }

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

// {"seq":..,"timestamp_ms":..,"kind":..,"payload":..} with payload keys sorted.
inline std::string serialize_entry(const TranscriptEntry& e) {
  std::string line = "{\"seq\":";
  line += std::to_string(e.seq);
  line += ",\"timestamp_ms\":";
  line += std::to_string(e.timestamp_ms);
  line += ",\"kind\":\"";
  line += to_string(e.kind);
  line += "\",\"payload\":";
  line += e.payload.dump();
  line += '}';
  return line;
}

class Transcript {
 public:
  const TranscriptEntry& append(TimestampMs t, EntryKind kind, Json payload) {
    entries_.push_back({static_cast<std::int64_t>(entries_.size()), t, kind, std::move(payload)});
    return entries_.back();
  }

  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& e : entries_) {
      out += serialize_entry(e);
      out += '\n';
    }
    return out;
  }

  static Transcript from_entries(std::vector<TranscriptEntry> entries) {
    Transcript t;
    t.entries_ = std::move(entries);
    return t;
  }

  friend bool operator==(const Transcript&, const Transcript&) = default;

 private:
  std::vector<TranscriptEntry> entries_;
};

inline TranscriptEntry parse_entry(const std::string& line) {
  Json j = Json::parse(line);
  if (!j.is_object() || j.size() != 4) throw Error(Errc::kParse, "entry must have exactly seq, timestamp_ms, kind, payload");
  TranscriptEntry e;
  e.seq = j.at("seq").get<std::int64_t>();
  e.timestamp_ms = j.at("timestamp_ms").get<TimestampMs>();
  auto kind = parse_entry_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::kParse, "unknown entry kind");
  e.kind = *kind;
  e.payload = j.at("payload");
  return e;
}

// Rejects gaps in seq, decreasing timestamps and a missing final newline
// (a truncated write). Errors name the last valid seq.
inline Transcript parse_transcript(const std::string& text, const std::string& name = "<transcript>") {
  std::vector<TranscriptEntry> entries;
  auto fail = [&](std::size_t line_no, const std::string& why) {
    const std::string last = entries.empty() ? "none" : std::to_string(entries.back().seq);
    throw Error(Errc::kParse, name + ":" + std::to_string(line_no) + ": " + why + " (last valid seq " + last + ")");
  };
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) fail(line_no, "truncated line");
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    TranscriptEntry e;
    try {
      e = parse_entry(line);
    } catch (const std::exception& ex) {
      fail(line_no, std::string("malformed entry: ") + ex.what());
    }
    if (e.seq != static_cast<std::int64_t>(entries.size())) fail(line_no, "seq " + std::to_string(e.seq) + " out of order");
    if (!entries.empty() && e.timestamp_ms < entries.back().timestamp_ms) fail(line_no, "timestamp decreases");
    entries.push_back(std::move(e));
  }
  return Transcript::from_entries(std::move(entries));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

inline Transcript load_transcript(const std::filesystem::path& path) {
  return parse_transcript(read_file(path), path.string());
}

// Writes `<store>/<session_id>.jsonl` and returns its path.
inline std::filesystem::path persist_transcript(const Transcript& transcript, const std::filesystem::path& store,
                                                const std::string& session_id) {
  std::error_code ec;
  std::filesystem::create_directories(store, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + store.string() + ": " + ec.message());
  auto path = store / (session_id + ".jsonl");
  write_file(path, transcript.to_jsonl());
  return path;
}

}  // namespace ge
