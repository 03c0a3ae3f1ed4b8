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

// Session driver: feeds signal samples and user input through detection,
// fusion and attribution into `step`, and writes the transcript.
//
// Inputs must arrive in non-decreasing time. At equal timestamps the order
// is: signal-derived events, then user events, then timers. While a reaction
// is still collecting anomalies (its grouping window has not passed), every
// later user event and timer is held back so that the reaction is delivered
// first.

#pragma once

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ge/config.hpp"
#include "ge/detector.hpp"
#include "ge/dialog.hpp"
#include "ge/phase.hpp"
#include "ge/signal.hpp"
#include "ge/transcript.hpp"

namespace ge {

enum class PresentationMode {
  kTimed,         // presentation lasts presentation_ms
  kAcknowledged,  // presentation ends when the UI acknowledges it
};

struct EngineOptions {
  PresentationMode mode = PresentationMode::kTimed;
  TimestampMs presentation_ms = 6000;
  TimestampMs dwell_ms = 1500;
  DetectorConfig detector;
  std::vector<SourceDescriptor> sources;

  static EngineOptions from(const SessionConfig& c, PresentationMode mode = PresentationMode::kTimed) {
    return {mode, c.presentation_ms, c.dwell_ms, c.detector, c.sources};
  }
};

class SessionEngine {
 public:
  using EntryListener = std::function<void(const TranscriptEntry&)>;

  SessionEngine(std::shared_ptr<const SessionRules> rules, EngineOptions options,
                std::shared_ptr<DialogClient> client = nullptr, std::string session_id = "session")
      : rules_(std::move(rules)),
        options_(std::move(options)),
        client_(std::move(client)),
        session_id_(std::move(session_id)),
        gate_(options_.sources),
        fuser_(options_.detector) {
    validate(options_.detector);
    if (rules_->dialog_service && !client_)
      throw Error(Errc::kInvalidArgument, "rules expect a dialog service but no client was given");
  }

  void on_entry(EntryListener listener) { listener_ = std::move(listener); }

  // `extra` fields are merged into the session_start entry.
  void start(TimestampMs t, const Json& extra = Json::object()) {
    if (started_) return;
    started_ = true;
    clock_ = t;
    auto [state, actions] = open_session(rules_);
    state_ = std::move(state);
    Json header{{"type", "session_start"}, {"session_id", session_id_}, {"v", 1}};
    for (const auto& [k, v] : extra.items()) header[k] = v;
    append(t, EntryKind::kEvent, std::move(header));
    append(t, EntryKind::kPhaseChange, Json{{"from", nullptr}, {"to", state_.phase}});
    for (const auto& a : actions) append(t, EntryKind::kAction, action_payload(a));
  }

  void push_sample(const SignalSample& s) {
    enter(s.timestamp_ms);
    drain(Key{s.timestamp_ms, kSignalClass, 0});

    const auto verdict = gate_.check(s);
    if (verdict != SampleGate::Verdict::kAccepted) {
      note(s.timestamp_ms,
             Json{{"type", "sample_rejected"},
                  {"source_id", s.source_id},
                  {"value", s.value},
                  {"reason", verdict == SampleGate::Verdict::kUnknownSource ? "unknown_source"
                             : verdict == SampleGate::Verdict::kNonMonotonic ? "non_monotonic"
                                                                             : "out_of_range"}});
      return;
    }
    auto it = detectors_.find(s.source_id);
    if (it == detectors_.end())
      it = detectors_.emplace(s.source_id, ZScoreDetector(s.source_id, options_.detector)).first;
    auto anomaly = it->second.push(s.timestamp_ms, s.value);
    if (!anomaly) return;
    if (fuser_.push(*anomaly) == ReactionFuser::Outcome::kSuppressed)
      note(s.timestamp_ms, Json{{"type", "anomaly_suppressed"}, {"anomaly", *anomaly}});
    for (auto& r : fuser_.take_completed()) deliver_reaction(std::move(r));
  }

  // Answers, assessments, replies and clarification requests.
  void push_user(SessionEvent event) {
    enter(event.timestamp_ms);
    const auto t = event.timestamp_ms;
    pending_.emplace(Key{t, kUserClass, next_seq_++}, Pending{std::move(event), {}});
    drain(Key{t, kUserClass, std::numeric_limits<std::uint64_t>::max()});
  }

  // Ends the presentation of `feature_id` at `t` in acknowledged mode.
  void acknowledge_presentation(const std::string& feature_id, TimestampMs t) {
    enter(t);
    drain(Key{t, kUserClass, std::numeric_limits<std::uint64_t>::max()});
    if (options_.mode != PresentationMode::kAcknowledged) return;
    if (!(state_.phase.kind == PhaseKind::kExplain && state_.phase.feature_id == feature_id)) return;
    if (timer_) return;
    if (!windows_.empty() && windows_.back().feature_id == feature_id) windows_.back().end = t;
    schedule_completion(feature_id, t + options_.dwell_ms);
  }

  // Lets time pass without input: fires due timers and closes a reaction
  // whose grouping window has passed.
  void advance_to(TimestampMs t) {
    enter(t);
    drain(Key{t, kSignalClass, 0});
  }

  // End of input: everything pending is delivered.
  void finish() {
    if (auto r = fuser_.close()) deliver_reaction(std::move(*r));
    drain(Key{std::numeric_limits<TimestampMs>::max(), kTimerClass + 1, 0});
  }

  bool done() const { return state_.phase.kind == PhaseKind::kDone; }
  const SessionState& state() const { return state_; }
  const Transcript& transcript() const { return transcript_; }
  const std::string& session_id() const { return session_id_; }
  TimestampMs clock() const { return clock_; }
  std::size_t rejected_samples() const { return gate_.rejected(); }

 private:
  static constexpr int kSignalClass = 0;
  static constexpr int kUserClass = 1;
  static constexpr int kTimerClass = 2;
  using Key = std::tuple<TimestampMs, int, std::uint64_t>;

  struct Pending {
    std::optional<SessionEvent> event;
    Json diagnostic;  // recorded as-is when there is no event
  };

  struct PresentedWindow {
    std::string feature_id;
    TimestampMs start = 0;
    std::optional<TimestampMs> end;
  };

  void enter(TimestampMs t) {
    if (!started_) throw Error(Errc::kInvalidArgument, "session not started");
    if (t < clock_)
      throw Error(Errc::kNonMonotonicTimestamp,
                  "input at " + std::to_string(t) + " precedes session clock " + std::to_string(clock_));
    clock_ = t;
    if (fuser_.due(t))
      if (auto r = fuser_.close()) deliver_reaction(std::move(*r));
  }

  // Processes queued events with key < limit, stopping at events held by an
  // open reaction.
  void drain(const Key& limit) {
    while (!pending_.empty()) {
      auto it = pending_.begin();
      if (!(it->first < limit)) break;
      if (fuser_.open() && std::get<0>(it->first) >= fuser_.open()->timestamp_ms) break;
      const Key key = it->first;
      Pending item = std::move(it->second);
      if (timer_ && *timer_ == key) timer_.reset();
      pending_.erase(it);
      if (item.event)
        process(*item.event);
      else
        append(std::get<0>(key), EntryKind::kEvent, std::move(item.diagnostic));
    }
  }

  std::optional<std::string> attribute(TimestampMs t) const {
    for (auto it = windows_.rbegin(); it != windows_.rend(); ++it) {
      if (state_.phase.has_feature() && state_.phase.feature_id == it->feature_id && t >= it->start)
        return it->feature_id;
      if (it->end && monitoring_window({it->start, *it->end}, options_.dwell_ms).contains(t)) return it->feature_id;
    }
    return std::nullopt;
  }

  void deliver_reaction(ReactionEvent r) {
    r.feature_id = attribute(r.timestamp_ms);
    process(SessionEvent{r.timestamp_ms, Reaction{std::move(r)}});
  }

  void schedule_completion(const std::string& feature_id, TimestampMs at) {
    Key key{at, kTimerClass, next_seq_++};
    pending_.emplace(key, Pending{SessionEvent{at, PresentationComplete{feature_id}}, {}});
    timer_ = key;
  }

  void process(const SessionEvent& event) {
    const auto t = event.timestamp_ms;
    append(t, EntryKind::kEvent, event_payload(event));
    const Phase before = state_.phase;
    auto result = step(state_, event);
    state_ = std::move(result.state);
    if (!before.same_step(state_.phase))
      append(t, EntryKind::kPhaseChange, Json{{"from", before}, {"to", state_.phase}});
    for (const auto& a : result.actions) append(t, EntryKind::kAction, action_payload(a));

    if (timer_ && !(state_.phase.kind == PhaseKind::kExplain &&
                    std::get<PresentationComplete>(pending_.at(*timer_).event->body).feature_id == state_.phase.feature_id)) {
      pending_.erase(*timer_);
      timer_.reset();
    }

    for (const auto& a : result.actions) {
      if (const auto* p = std::get_if<PresentFeature>(&a)) {
        windows_.push_back({p->feature_id, t, std::nullopt});
        if (options_.mode == PresentationMode::kTimed) {
          windows_.back().end = t + options_.presentation_ms;
          schedule_completion(p->feature_id, t + options_.presentation_ms + options_.dwell_ms);
        }
      } else if (const auto* req = std::get_if<RequestClarification>(&a)) {
        std::optional<std::string> text;
        try {
          text = client_->complete(req->request);
        } catch (...) {
          text.reset();
        }
        process(SessionEvent{t, DialogServiceReply{std::move(text)}});
      }
    }
  }

  // Diagnostics wait behind an open reaction like everything else, so entry
  // timestamps never decrease.
  void note(TimestampMs t, Json payload) {
    if (fuser_.open())
      pending_.emplace(Key{t, kSignalClass, next_seq_++}, Pending{std::nullopt, std::move(payload)});
    else
      append(t, EntryKind::kEvent, std::move(payload));
  }

  void append(TimestampMs t, EntryKind kind, Json payload) {
    const auto& e = transcript_.append(t, kind, std::move(payload));
    if (listener_) listener_(e);
  }

  std::shared_ptr<const SessionRules> rules_;
  EngineOptions options_;
  std::shared_ptr<DialogClient> client_;
  std::string session_id_;
  SampleGate gate_;
  ReactionFuser fuser_;
  std::map<std::string, ZScoreDetector> detectors_;
  std::map<Key, Pending> pending_;
  std::optional<Key> timer_;
  std::vector<PresentedWindow> windows_;
  std::uint64_t next_seq_ = 0;
  SessionState state_;
  Transcript transcript_;
  EntryListener listener_;
  TimestampMs clock_ = 0;
  bool started_ = false;
};

}  // namespace ge
