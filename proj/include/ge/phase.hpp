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

// Phase control: a pure, total state machine over session events.
//
//   P0 assessment -> (P1 explain feature -> [P2 understanding -> P3 agreement])* -> P4 final -> Done
//
// P2 is entered only from P1 on a reaction or a user clarification request
// for the feature being explained; otherwise agreement with a feature is
// implicit and the next feature follows.

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ge/detector.hpp"
#include "ge/dialog.hpp"
#include "ge/json_codec.hpp"
#include "ge/phase_types.hpp"
#include "ge/risk.hpp"

namespace ge {

// ---------------------------------------------------------------------------
// Events

enum class ReplyKind { kNoProblem, kProblem, kUnderstood, kNotUnderstood, kAgree, kDisagree, kFinalDecision };

constexpr std::string_view to_string(ReplyKind k) {
  switch (k) {
    case ReplyKind::kNoProblem: return "no_problem";
    case ReplyKind::kProblem: return "problem";
    case ReplyKind::kUnderstood: return "understood";
    case ReplyKind::kNotUnderstood: return "not_understood";
    case ReplyKind::kAgree: return "agree";
    case ReplyKind::kDisagree: return "disagree";
    case ReplyKind::kFinalDecision: return "final_decision";
  }
  return "?";
}

inline std::optional<ReplyKind> parse_reply_kind(std::string_view text) {
  for (auto k : {ReplyKind::kNoProblem, ReplyKind::kProblem, ReplyKind::kUnderstood, ReplyKind::kNotUnderstood,
                 ReplyKind::kAgree, ReplyKind::kDisagree, ReplyKind::kFinalDecision})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

struct AnswersSubmitted {
  Answers answers;
  friend bool operator==(const AnswersSubmitted&, const AnswersSubmitted&) = default;
};
struct InitialAssessmentGiven {
  int level = 0;
  friend bool operator==(const InitialAssessmentGiven&, const InitialAssessmentGiven&) = default;
};
struct PresentationComplete {
  std::string feature_id;
  friend bool operator==(const PresentationComplete&, const PresentationComplete&) = default;
};
struct Reaction {
  ReactionEvent reaction;
  friend bool operator==(const Reaction&, const Reaction&) = default;
};
struct UserClarificationRequest {
  std::string feature_id;
  friend bool operator==(const UserClarificationRequest&, const UserClarificationRequest&) = default;
};
struct UserReply {
  ReplyKind kind = ReplyKind::kAgree;
  std::string free_text;
  int level = 0;  // final_decision only
  friend bool operator==(const UserReply&, const UserReply&) = default;
};
struct DialogServiceReply {
  std::optional<std::string> text;  // nullopt: the service failed
  friend bool operator==(const DialogServiceReply&, const DialogServiceReply&) = default;
};
struct Timeout {
  std::string token;
  friend bool operator==(const Timeout&, const Timeout&) = default;
};

using EventBody = std::variant<AnswersSubmitted, InitialAssessmentGiven, PresentationComplete, Reaction,
                               UserClarificationRequest, UserReply, DialogServiceReply, Timeout>;

struct SessionEvent {
  TimestampMs timestamp_ms = 0;
  EventBody body;
  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

// ---------------------------------------------------------------------------
// Actions

struct Prompt {
  std::string prompt_id;
  std::string text;
  std::vector<std::pair<std::string, std::string>> options;  // (id, label)
};

struct Ask {
  Prompt prompt;
};
struct PresentFeature {
  std::string feature_id;
  std::string text;
};
struct Say {
  Utterance utterance;
  std::optional<DialogPath> path;  // set for clarification strategies
};
struct AskProblemQuestion {
  std::string feature_id;
  std::string text;
};
struct AskUnderstanding {
  std::string feature_id;
  std::string text;
};
struct AskAgreement {
  std::string feature_id;
  std::string text;
};
struct PresentCounterfactual {
  RiskDecision decision;
  int original_level = 0;
  std::string text;
};
struct RequestFinalDecision {
  RiskDecision original;
  std::vector<RiskDecision> counterfactuals;
  std::string text;
};
// Asks the session driver to call the dialog service; the answer comes back
// as a DialogServiceReply event.
struct RequestClarification {
  DialogRequest request;
};
struct Record {
  std::string note;
  Json data;
};
struct EndSession {
  int final_level = 0;
};

using Action = std::variant<Ask, PresentFeature, Say, AskProblemQuestion, AskUnderstanding, AskAgreement,
                            PresentCounterfactual, RequestFinalDecision, RequestClarification, Record, EndSession>;

// ---------------------------------------------------------------------------
// State

// The parts of a session configuration the state machine reads.
struct SessionRules {
  Questionnaire questionnaire;
  TemplateSet templates = default_templates();
  bool dialog_service = false;
};

struct SessionState {
  std::shared_ptr<const SessionRules> rules;
  Phase phase;
  std::vector<std::string> order;  // presentation order, fixed after P0
  std::vector<std::string> queue;  // not yet presented, front first
  GroundingLedger ledger;
  std::optional<RiskDecision> decision;
  std::optional<InitialAssessment> initial;
  std::set<std::string> contested;
  std::vector<RiskDecision> counterfactuals;
  std::vector<Utterance> history;
  std::optional<Strategy> pending_strategy;  // awaiting the dialog service
  std::optional<int> final_level;
};

// Initial state plus the questionnaire prompts of Phase 0.
inline std::pair<SessionState, std::vector<Action>> open_session(std::shared_ptr<const SessionRules> rules) {
  validate(rules->questionnaire);
  SessionState state;
  state.rules = std::move(rules);
  std::vector<Action> actions;
  for (const auto& q : state.rules->questionnaire.questions) {
    Prompt p{q.question_id, q.text, {}};
    for (const auto& o : q.options) p.options.emplace_back(o.option_id, o.label);
    actions.push_back(Ask{std::move(p)});
  }
  return {std::move(state), std::move(actions)};
}

struct StepContext {
  SessionState& state;
  const SessionEvent& event;
  std::vector<Action>& actions;

  TimestampMs now() const { return event.timestamp_ms; }
  const TemplateSet& templates() const { return state.rules->templates; }
};

// Returns false when the event means nothing in the current phase.
using PhaseHandler = std::function<bool(StepContext&)>;

namespace phase_detail {

inline std::string render(const StepContext& ctx, const std::string& id, const Slots& slots) {
  return render_utterance(id, slots, ctx.templates());
}

inline Slots slots_for(const StepContext& ctx, const std::string& feature_id) {
  return feature_slots(*ctx.state.decision, feature_id, ctx.templates());
}

inline void say(StepContext& ctx, std::string text, std::optional<std::string> feature_id = std::nullopt,
                std::optional<Strategy> strategy = std::nullopt, std::optional<DialogPath> path = std::nullopt) {
  Utterance u{Speaker::kSystem, std::move(text), ctx.state.phase, std::move(feature_id), strategy, ctx.now()};
  ctx.state.history.push_back(u);
  ctx.actions.push_back(Say{std::move(u), path});
}

inline void note_user(StepContext& ctx, const UserReply& reply) {
  std::string text = reply.free_text.empty() ? std::string(to_string(reply.kind)) : reply.free_text;
  std::optional<std::string> feature;
  if (ctx.state.phase.has_feature()) feature = ctx.state.phase.feature_id;
  ctx.state.history.push_back({Speaker::kUser, std::move(text), ctx.state.phase, feature, std::nullopt, ctx.now()});
}

inline void system_line(StepContext& ctx, const std::string& text, const std::string& feature_id) {
  ctx.state.history.push_back({Speaker::kSystem, text, ctx.state.phase, feature_id, std::nullopt, ctx.now()});
}

inline void ground(StepContext& ctx, const std::string& feature_id, GroundingTransition t) {
  const auto level = ctx.state.ledger.advance(feature_id, t);
  ctx.actions.push_back(Record{"grounding", Json{{"feature_id", feature_id}, {"level", to_string(level)}}});
}

inline void enter_explain(StepContext& ctx, const std::string& feature_id) {
  ctx.state.phase = Phase::explain(feature_id);
  ground(ctx, feature_id, GroundingTransition::kPresent);
  auto text = render(ctx, "explain", slots_for(ctx, feature_id));
  system_line(ctx, text, feature_id);
  ctx.actions.push_back(PresentFeature{feature_id, std::move(text)});
}

inline void enter_final(StepContext& ctx) {
  ctx.state.phase = Phase::final_decision();
  auto text = render(ctx, "prompt.final", {});
  ctx.actions.push_back(RequestFinalDecision{*ctx.state.decision, ctx.state.counterfactuals, std::move(text)});
}

inline void advance_feature(StepContext& ctx) {
  auto& queue = ctx.state.queue;
  if (queue.empty()) {
    enter_final(ctx);
    return;
  }
  auto next = queue.front();
  queue.erase(queue.begin());
  enter_explain(ctx, next);
}

inline void enter_understanding(StepContext& ctx, const std::string& feature_id) {
  ground(ctx, feature_id, GroundingTransition::kReact);
  ctx.state.phase = Phase::understanding(feature_id, 0);
  auto text = render(ctx, "prompt.problem", slots_for(ctx, feature_id));
  system_line(ctx, text, feature_id);
  ctx.actions.push_back(AskProblemQuestion{feature_id, std::move(text)});
}

inline void enter_agreement(StepContext& ctx, const std::string& feature_id) {
  ctx.state.phase = Phase::agreement(feature_id);
  auto text = render(ctx, "prompt.agreement", slots_for(ctx, feature_id));
  system_line(ctx, text, feature_id);
  ctx.actions.push_back(AskAgreement{feature_id, std::move(text)});
}

inline void ask_understanding(StepContext& ctx, const std::string& feature_id) {
  auto text = render(ctx, "prompt.understanding", slots_for(ctx, feature_id));
  system_line(ctx, text, feature_id);
  ctx.actions.push_back(AskUnderstanding{feature_id, std::move(text)});
}

inline void reject(StepContext& ctx, const std::string& reason) {
  ctx.actions.push_back(Record{"rejected", Json{{"reason", reason}}});
}

inline bool on_assessment(StepContext& ctx) {
  auto& s = ctx.state;
  if (const auto* e = std::get_if<AnswersSubmitted>(&ctx.event.body)) {
    if (s.decision) return false;
    try {
      s.decision = classify_risk(e->answers, s.rules->questionnaire);
    } catch (const Error& err) {
      reject(ctx, err.what());
      return true;
    }
    ctx.actions.push_back(Record{"risk_decision", Json(*s.decision)});
    ctx.actions.push_back(Ask{Prompt{"initial_assessment",
                                     render(ctx, "question.initial_assessment", {}),
                                     {{"1", level_name(1)},
                                      {"2", level_name(2)},
                                      {"3", level_name(3)},
                                      {"4", level_name(4)},
                                      {"5", level_name(5)}}}});
    return true;
  }
  if (const auto* e = std::get_if<InitialAssessmentGiven>(&ctx.event.body)) {
    if (!s.decision) return false;
    try {
      record_initial_assessment(s.initial, e->level, ctx.now());
    } catch (const Error& err) {
      reject(ctx, err.what());
      return true;
    }
    ctx.actions.push_back(Record{"initial_assessment", Json{{"self_level", s.initial->self_level}}});
    s.order = order_features(s.decision->contributions);
    s.queue = s.order;
    say(ctx, render(ctx, "decision.summary",
                    {{"level", std::to_string(s.decision->level)}, {"level_name", level_name(s.decision->level)}}));
    advance_feature(ctx);
    return true;
  }
  return false;
}

inline bool on_explain(StepContext& ctx) {
  const std::string feature = ctx.state.phase.feature_id;
  return std::visit(
      [&](const auto& e) -> bool {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, Reaction>) {
          if (e.reaction.feature_id != feature) return false;
          enter_understanding(ctx, feature);
          return true;
        } else if constexpr (std::is_same_v<E, UserClarificationRequest>) {
          if (e.feature_id != feature) return false;
          enter_understanding(ctx, feature);
          return true;
        } else if constexpr (std::is_same_v<E, UserReply>) {
          if (e.kind != ReplyKind::kProblem) return false;
          note_user(ctx, e);
          enter_understanding(ctx, feature);
          return true;
        } else if constexpr (std::is_same_v<E, PresentationComplete>) {
          if (e.feature_id != feature) return false;
          ground(ctx, feature, GroundingTransition::kAgree);
          advance_feature(ctx);
          return true;
        } else {
          return false;
        }
      },
      ctx.event.body);
}

inline void deliver_clarification(StepContext& ctx, const std::string& feature, Strategy strategy,
                                  std::optional<std::string> service_text) {
  if (service_text && !service_text->empty())
    say(ctx, std::move(*service_text), feature, strategy, DialogPath::kService);
  else
    say(ctx, fallback_clarification(*ctx.state.decision, feature, strategy, ctx.templates()), feature, strategy,
        DialogPath::kFallback);
  ask_understanding(ctx, feature);
}

inline bool on_understanding(StepContext& ctx) {
  auto& s = ctx.state;
  const std::string feature = s.phase.feature_id;

  if (s.pending_strategy) {
    const auto* reply = std::get_if<DialogServiceReply>(&ctx.event.body);
    if (!reply) return false;
    const auto strategy = *std::exchange(s.pending_strategy, std::nullopt);
    deliver_clarification(ctx, feature, strategy, reply->text);
    return true;
  }

  const auto* reply = std::get_if<UserReply>(&ctx.event.body);
  if (!reply) return false;
  switch (reply->kind) {
    case ReplyKind::kUnderstood:
    case ReplyKind::kNoProblem:
      note_user(ctx, *reply);
      ground(ctx, feature, GroundingTransition::kUnderstand);
      enter_agreement(ctx, feature);
      return true;
    case ReplyKind::kProblem:
    case ReplyKind::kNotUnderstood: {
      note_user(ctx, *reply);
      const int attempt = s.phase.attempt;
      auto strategy = next_strategy(attempt);
      if (!strategy) {
        ground(ctx, feature, GroundingTransition::kReserve);
        say(ctx, render(ctx, "notice.reservation", slots_for(ctx, feature)), feature);
        enter_agreement(ctx, feature);
        return true;
      }
      ground(ctx, feature, GroundingTransition::kClarify);
      s.phase.attempt = attempt + 1;
      if (s.rules->dialog_service) {
        s.pending_strategy = strategy;
        ctx.actions.push_back(RequestClarification{make_dialog_request(*s.decision, feature, *strategy, s.history)});
      } else {
        deliver_clarification(ctx, feature, *strategy, std::nullopt);
      }
      return true;
    }
    default:
      return false;
  }
}

inline bool on_agreement(StepContext& ctx) {
  auto& s = ctx.state;
  const std::string feature = s.phase.feature_id;
  const auto* reply = std::get_if<UserReply>(&ctx.event.body);
  if (!reply) return false;
  if (reply->kind == ReplyKind::kAgree) {
    note_user(ctx, *reply);
    ground(ctx, feature, GroundingTransition::kAgree);
    advance_feature(ctx);
    return true;
  }
  if (reply->kind == ReplyKind::kDisagree) {
    note_user(ctx, *reply);
    ground(ctx, feature, GroundingTransition::kDisagree);
    s.contested.insert(feature);
    try {
      auto cf = counterfactual(*s.decision, s.contested);
      std::string excluded;
      for (const auto& id : s.contested) {
        if (!excluded.empty()) excluded += ", ";
        excluded += s.decision->find(id)->label;
      }
      auto text = render(ctx, "notice.counterfactual",
                         {{"excluded", excluded},
                          {"level", std::to_string(cf.level)},
                          {"level_name", level_name(cf.level)},
                          {"original_level", std::to_string(s.decision->level)}});
      system_line(ctx, text, feature);
      s.counterfactuals.push_back(cf);
      ctx.actions.push_back(PresentCounterfactual{std::move(cf), s.decision->level, std::move(text)});
    } catch (const Error& err) {
      if (err.code() != Errc::kAllFeaturesExcluded) throw;
      say(ctx, render(ctx, "notice.counterfactual_unavailable", {}), feature);
    }
    advance_feature(ctx);
    return true;
  }
  return false;
}

inline bool on_final(StepContext& ctx) {
  const auto* reply = std::get_if<UserReply>(&ctx.event.body);
  if (!reply || reply->kind != ReplyKind::kFinalDecision) return false;
  if (reply->level < kMinLevel || reply->level > kMaxLevel) {
    reject(ctx, "final decision level must be in 1..5, got " + std::to_string(reply->level));
    return true;
  }
  note_user(ctx, *reply);
  ctx.state.final_level = reply->level;
  ctx.state.phase = Phase::done();
  ctx.actions.push_back(EndSession{reply->level});
  return true;
}

}  // namespace phase_detail

// Handlers keyed by phase kind. Replacing or wrapping an entry changes the
// behavior of that phase without touching step().
class TransitionTable {
 public:
  TransitionTable() {
    handlers_[index(PhaseKind::kAssessment)] = phase_detail::on_assessment;
    handlers_[index(PhaseKind::kExplain)] = phase_detail::on_explain;
    handlers_[index(PhaseKind::kUnderstanding)] = phase_detail::on_understanding;
    handlers_[index(PhaseKind::kAgreement)] = phase_detail::on_agreement;
    handlers_[index(PhaseKind::kFinalDecision)] = phase_detail::on_final;
    handlers_[index(PhaseKind::kDone)] = [](StepContext&) { return false; };
  }

  void set(PhaseKind kind, PhaseHandler handler) { handlers_[index(kind)] = std::move(handler); }
  const PhaseHandler& get(PhaseKind kind) const { return handlers_[index(kind)]; }

  static const TransitionTable& standard() {
    static const TransitionTable table;
    return table;
  }

 private:
  static std::size_t index(PhaseKind kind) { return static_cast<std::size_t>(kind); }
  std::array<PhaseHandler, kPhaseKindCount> handlers_;
};

struct StepResult {
  SessionState state;
  std::vector<Action> actions;
};

// Total: events that mean nothing in the current phase, and handler
// failures, become Record actions and leave the state unchanged.
inline StepResult step(SessionState state, const SessionEvent& event,
                       const TransitionTable& table = TransitionTable::standard()) {
  std::vector<Action> actions;
  SessionState next = state;
  StepContext ctx{next, event, actions};
  bool handled = false;
  try {
    handled = table.get(next.phase.kind)(ctx);
  } catch (const std::exception& e) {
    return {std::move(state), {Record{"failed", Json{{"reason", e.what()}}}}};
  }
  if (!handled) {
    Record ignored{"ignored", Json{{"phase", state.phase}}};
    return {std::move(state), {std::move(ignored)}};
  }
  return {std::move(next), std::move(actions)};
}

// ---------------------------------------------------------------------------
// Monitoring windows

struct Interval {
  TimestampMs start = 0;
  TimestampMs end = 0;

  bool contains(TimestampMs t) const { return t >= start && t <= end; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Reactions inside [presentation start, presentation end + dwell] belong to
// the presented feature.
inline Interval monitoring_window(const Interval& presentation, TimestampMs dwell_ms) {
  return {presentation.start, presentation.end + dwell_ms};
}

}  // namespace ge
