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

// Grounding ledger, clarification strategy ladder, utterance templates and
// the external dialog-service client contract with its offline fallback.

#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ge/error.hpp"
#include "ge/phase_types.hpp"
#include "ge/risk.hpp"

namespace ge {

// ---------------------------------------------------------------------------
// Grounding ledger

enum class GroundingKind {
  kNotPresented,
  kPresented,
  kReactionDetected,
  kClarifying,
  kUnderstood,
  kUnderstoodWithReservation,
  kAgreed,
  kDisagreed,
};

struct GroundingLevel {
  GroundingKind kind = GroundingKind::kNotPresented;
  int attempt = 0;  // only meaningful for kClarifying

  friend bool operator==(const GroundingLevel&, const GroundingLevel&) = default;
};

inline std::string to_string(const GroundingLevel& level) {
  switch (level.kind) {
    case GroundingKind::kNotPresented: return "NotPresented";
    case GroundingKind::kPresented: return "Presented";
    case GroundingKind::kReactionDetected: return "ReactionDetected";
    case GroundingKind::kClarifying: return "Clarifying(" + std::to_string(level.attempt) + ")";
    case GroundingKind::kUnderstood: return "Understood";
    case GroundingKind::kUnderstoodWithReservation: return "UnderstoodWithReservation";
    case GroundingKind::kAgreed: return "Agreed";
    case GroundingKind::kDisagreed: return "Disagreed";
  }
  return "?";
}

enum class GroundingTransition { kPresent, kReact, kClarify, kUnderstand, kReserve, kAgree, kDisagree };

constexpr std::string_view to_string(GroundingTransition t) {
  switch (t) {
    case GroundingTransition::kPresent: return "present";
    case GroundingTransition::kReact: return "react";
    case GroundingTransition::kClarify: return "clarify";
    case GroundingTransition::kUnderstand: return "understand";
    case GroundingTransition::kReserve: return "reserve";
    case GroundingTransition::kAgree: return "agree";
    case GroundingTransition::kDisagree: return "disagree";
  }
  return "?";
}

inline constexpr int kLadderLength = 4;

// Allowed moves:
//   NotPresented -> Presented -> ReactionDetected -> Clarifying(0..3)
//     -> Understood | UnderstoodWithReservation -> Agreed | Disagreed
//   Presented -> Agreed (implicit agreement, no reaction)
//   ReactionDetected -> Understood (no clarification needed)
inline std::optional<GroundingLevel> grounding_successor(const GroundingLevel& from, GroundingTransition t) {
  using K = GroundingKind;
  switch (t) {
    case GroundingTransition::kPresent:
      if (from.kind == K::kNotPresented) return GroundingLevel{K::kPresented};
      break;
    case GroundingTransition::kReact:
      if (from.kind == K::kPresented) return GroundingLevel{K::kReactionDetected};
      break;
    case GroundingTransition::kClarify:
      if (from.kind == K::kReactionDetected) return GroundingLevel{K::kClarifying, 0};
      if (from.kind == K::kClarifying && from.attempt + 1 < kLadderLength)
        return GroundingLevel{K::kClarifying, from.attempt + 1};
      break;
    case GroundingTransition::kUnderstand:
      if (from.kind == K::kReactionDetected || from.kind == K::kClarifying) return GroundingLevel{K::kUnderstood};
      break;
    case GroundingTransition::kReserve:
      if (from.kind == K::kClarifying && from.attempt == kLadderLength - 1)
        return GroundingLevel{K::kUnderstoodWithReservation};
      break;
    case GroundingTransition::kAgree:
      if (from.kind == K::kPresented || from.kind == K::kUnderstood || from.kind == K::kUnderstoodWithReservation)
        return GroundingLevel{K::kAgreed};
      break;
    case GroundingTransition::kDisagree:
      if (from.kind == K::kUnderstood || from.kind == K::kUnderstoodWithReservation)
        return GroundingLevel{K::kDisagreed};
      break;
  }
  return std::nullopt;
}

class GroundingLedger {
 public:
  GroundingLevel level(const std::string& feature_id) const {
    auto it = levels_.find(feature_id);
    return it == levels_.end() ? GroundingLevel{} : it->second;
  }

  GroundingLevel advance(const std::string& feature_id, GroundingTransition t) {
    const auto from = level(feature_id);
    auto to = grounding_successor(from, t);
    if (!to)
      throw Error(Errc::kIllegalGroundingTransition,
                  feature_id + ": " + to_string(from) + " --" + std::string(to_string(t)) + "-->");
    levels_[feature_id] = *to;
    return *to;
  }

  const std::map<std::string, GroundingLevel>& levels() const { return levels_; }

  friend bool operator==(const GroundingLedger&, const GroundingLedger&) = default;

 private:
  std::map<std::string, GroundingLevel> levels_;
};

inline GroundingLedger advance_grounding(GroundingLedger ledger, const std::string& feature_id,
                                         GroundingTransition t) {
  ledger.advance(feature_id, t);
  return ledger;
}

// ---------------------------------------------------------------------------
// Strategy ladder

enum class Strategy { kRepeat, kRephrase, kContrast, kChangeFocus };

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRepeat: return "repeat";
    case Strategy::kRephrase: return "rephrase";
    case Strategy::kContrast: return "contrast";
    case Strategy::kChangeFocus: return "change_focus";
  }
  return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view text) {
  for (auto s : {Strategy::kRepeat, Strategy::kRephrase, Strategy::kContrast, Strategy::kChangeFocus})
    if (to_string(s) == text) return s;
  return std::nullopt;
}

// nullopt means the ladder is exhausted.
inline std::optional<Strategy> next_strategy(int attempt) {
  switch (attempt) {
    case 0: return Strategy::kRepeat;
    case 1: return Strategy::kRephrase;
    case 2: return Strategy::kContrast;
    case 3: return Strategy::kChangeFocus;
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Utterances and templates

enum class Speaker { kSystem, kUser };

constexpr std::string_view to_string(Speaker s) { return s == Speaker::kSystem ? "system" : "user"; }

struct Utterance {
  Speaker speaker = Speaker::kSystem;
  std::string text;
  Phase phase;
  std::optional<std::string> feature_id;
  std::optional<Strategy> strategy;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

using TemplateSet = std::map<std::string, std::string>;
using Slots = std::map<std::string, std::string>;

// English defaults. "strategy.contrast" and "strategy.change_focus" read the
// contrast as the counterfactual level without the feature and the change of
// focus as a switch to the strongest other feature.
inline TemplateSet default_templates() {
  return {
      {"question.initial_assessment",
       "Before you see the system's assessment: how would you rate your own risk attitude, from 1 "
       "(very risk-averse) to 5 (very risk-seeking)?"},
      {"decision.summary",
       "Based on your answers the system classifies your risk profile as level {level} ({level_name})."},
      {"explain",
       "Your answer \"{option}\" on {feature} moves the assessment towards {direction} "
       "(weight {weight}, contribution {contribution})."},
      {"prompt.problem", "Do you see a problem with the explanation of {feature}?"},
      {"prompt.understanding", "Is the role of {feature} in the assessment clear now?"},
      {"prompt.agreement", "Do you agree that {feature} should count towards your assessment?"},
      {"strategy.repeat", "Let me repeat: {explanation}"},
      {"strategy.rephrase",
       "Put differently: the system reads your answer on {feature} as a {direction} signal, and it carries "
       "weight {weight} in the overall score."},
      {"strategy.contrast",
       "Compare: with {feature} the system assigns level {level}; without {feature} it would assign level "
       "{counterfactual_level}."},
      {"strategy.change_focus",
       "Let us look at the bigger picture: the strongest other factor is {focus_feature}, which points "
       "towards {focus_direction}."},
      {"notice.reservation", "Let us move on. Your reservations about {feature} are noted."},
      {"notice.counterfactual",
       "Without {excluded}, the system would assign level {level} ({level_name}) instead of level "
       "{original_level}."},
      {"notice.counterfactual_unavailable",
       "Every feature has now been contested, so no decision remains without them."},
      {"prompt.final",
       "Please make your final decision: choose a risk level from 1 (very risk-averse) to 5 (very "
       "risk-seeking)."},
  };
}

// Substitutes `{name}` placeholders (name = [A-Za-z0-9_]+). Other braces are
// copied verbatim. Unused slots are ignored.
inline std::string render_template(std::string_view text, const Slots& slots) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        const std::string name(text.substr(i + 1, j - i - 1));
        auto it = slots.find(name);
        if (it == slots.end()) throw Error(Errc::kMissingSlot, name);
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

inline std::string render_utterance(const std::string& template_id, const Slots& slots,
                                    const TemplateSet& templates) {
  auto it = templates.find(template_id);
  if (it == templates.end()) throw Error(Errc::kUnknownTemplate, template_id);
  return render_template(it->second, slots);
}

inline std::string format_fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string direction_word(double contribution) {
  if (contribution < 0.0) return "risk-averse";
  if (contribution > 0.0) return "risk-seeking";
  return "neither direction";
}

// Level of the decision without `feature_id`, if any feature would remain.
inline std::optional<int> counterfactual_level(const RiskDecision& decision, const std::string& feature_id) {
  try {
    return counterfactual(decision, {feature_id}).level;
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Slots for explaining one feature of a decision.
inline Slots feature_slots(const RiskDecision& decision, const std::string& feature_id,
                           const TemplateSet& templates) {
  const auto* c = decision.find(feature_id);
  if (!c) throw Error(Errc::kInvalidArgument, "unknown feature '" + feature_id + "'");
  Slots slots{
      {"feature", c->label},
      {"feature_id", c->feature_id},
      {"option", c->option_id},
      {"direction", direction_word(c->contribution)},
      {"weight", format_fixed(c->weight)},
      {"tendency", format_fixed(c->tendency)},
      {"contribution", format_fixed(c->contribution)},
      {"level", std::to_string(decision.level)},
      {"level_name", level_name(decision.level)},
  };
  auto cf = counterfactual_level(decision, feature_id);
  slots["counterfactual_level"] = cf ? std::to_string(*cf) : "unavailable";

  const FeatureContribution* focus = nullptr;
  for (const auto& other : decision.contributions) {
    if (other.feature_id == feature_id || decision.excluded.count(other.feature_id)) continue;
    if (!focus || std::abs(other.contribution) > std::abs(focus->contribution)) focus = &other;
  }
  slots["focus_feature"] = focus ? focus->label : c->label;
  slots["focus_direction"] = direction_word(focus ? focus->contribution : c->contribution);
  slots["explanation"] = render_utterance("explain", slots, templates);
  return slots;
}

// ---------------------------------------------------------------------------
// Dialog service

struct DialogRequest {
  std::string feature_id;
  std::string label;
  double tendency = 0.0;
  Strategy strategy = Strategy::kRepeat;
  std::vector<std::pair<Speaker, std::string>> history;  // oldest first, at most 10
  std::optional<int> counterfactual_level;

  nlohmann::json to_json() const {
    nlohmann::json h = nlohmann::json::array();
    for (const auto& [speaker, text] : history) h.push_back({{"speaker", to_string(speaker)}, {"text", text}});
    return {
        {"feature_id", feature_id},
        {"label", label},
        {"tendency", tendency},
        {"strategy", to_string(strategy)},
        {"history", std::move(h)},
        {"counterfactual_level", counterfactual_level ? nlohmann::json(*counterfactual_level) : nlohmann::json()},
    };
  }

  friend bool operator==(const DialogRequest&, const DialogRequest&) = default;
};

inline constexpr std::size_t kDialogHistoryLimit = 10;

inline DialogRequest make_dialog_request(const RiskDecision& decision, const std::string& feature_id,
                                         Strategy strategy, const std::vector<Utterance>& history) {
  const auto* c = decision.find(feature_id);
  if (!c) throw Error(Errc::kInvalidArgument, "unknown feature '" + feature_id + "'");
  DialogRequest req{c->feature_id, c->label, c->tendency, strategy, {}, counterfactual_level(decision, feature_id)};
  const std::size_t first = history.size() > kDialogHistoryLimit ? history.size() - kDialogHistoryLimit : 0;
  for (std::size_t i = first; i < history.size(); ++i) req.history.emplace_back(history[i].speaker, history[i].text);
  return req;
}

// External generator of clarification text. Implementations return nullopt
// on any failure, including timeouts; they must never block indefinitely.
class DialogClient {
 public:
  virtual ~DialogClient() = default;
  virtual std::optional<std::string> complete(const DialogRequest& request) = 0;
};

inline std::string fallback_clarification(const RiskDecision& decision, const std::string& feature_id,
                                          Strategy strategy, const TemplateSet& templates) {
  return render_utterance("strategy." + std::string(to_string(strategy)), feature_slots(decision, feature_id, templates),
                          templates);
}

enum class DialogPath { kService, kFallback };

constexpr std::string_view to_string(DialogPath p) { return p == DialogPath::kService ? "service" : "fallback"; }

struct Clarification {
  std::string text;
  DialogPath path = DialogPath::kFallback;
};

// Service text when a client answers with non-empty text, template text
// otherwise. Never throws for client failures.
inline Clarification generate_clarification(const RiskDecision& decision, const std::string& feature_id,
                                            Strategy strategy, const std::vector<Utterance>& history,
                                            const TemplateSet& templates, DialogClient* client) {
  if (client) {
    std::optional<std::string> reply;
    try {
      reply = client->complete(make_dialog_request(decision, feature_id, strategy, history));
    } catch (...) {
      reply.reset();
    }
    if (reply && !reply->empty()) return {*reply, DialogPath::kService};
  }
  return {fallback_clarification(decision, feature_id, strategy, templates), DialogPath::kFallback};
}

}  // namespace ge
