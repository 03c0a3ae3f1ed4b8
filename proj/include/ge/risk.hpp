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

// Questionnaire risk classification, feature ordering and counterfactuals.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ge/error.hpp"

namespace ge {

struct AnswerOption {
  std::string option_id;
  std::string label;
  double tendency = 0.0;  // -1 risk-averse .. +1 risk-seeking

  friend bool operator==(const AnswerOption&, const AnswerOption&) = default;
};

struct Question {
  std::string question_id;
  std::string text;
  std::string label;  // feature name shown in explanations
  std::vector<AnswerOption> options;

  const AnswerOption* find_option(const std::string& option_id) const {
    for (const auto& o : options)
      if (o.option_id == option_id) return &o;
    return nullptr;
  }

  friend bool operator==(const Question&, const Question&) = default;
};

inline void validate(const Question& q) {
  if (q.question_id.empty()) throw Error(Errc::kInvalidArgument, "question_id must not be empty");
  if (q.options.size() < 2)
    throw Error(Errc::kInvalidArgument, "question '" + q.question_id + "' needs at least 2 options");
  std::set<std::string> ids;
  for (const auto& o : q.options) {
    if (!ids.insert(o.option_id).second)
      throw Error(Errc::kInvalidArgument, "duplicate option '" + o.option_id + "' in '" + q.question_id + "'");
    if (!(o.tendency >= -1.0 && o.tendency <= 1.0))
      throw Error(Errc::kInvalidArgument, "tendency of '" + o.option_id + "' outside [-1, 1]");
  }
}

struct Questionnaire {
  std::vector<Question> questions;
  std::map<std::string, double> weights;  // keyed by question_id

  const Question* find(const std::string& question_id) const {
    for (const auto& q : questions)
      if (q.question_id == question_id) return &q;
    return nullptr;
  }

  friend bool operator==(const Questionnaire&, const Questionnaire&) = default;
};

using Answers = std::map<std::string, std::string>;

struct FeatureContribution {
  std::string feature_id;
  std::string label;
  std::string option_id;
  double weight = 0.0;
  double tendency = 0.0;
  double contribution = 0.0;

  friend bool operator==(const FeatureContribution&, const FeatureContribution&) = default;
};

struct RiskDecision {
  double score = 0.0;
  int level = 3;
  std::vector<FeatureContribution> contributions;
  std::set<std::string> excluded;

  const FeatureContribution* find(const std::string& feature_id) const {
    for (const auto& c : contributions)
      if (c.feature_id == feature_id) return &c;
    return nullptr;
  }

  friend bool operator==(const RiskDecision&, const RiskDecision&) = default;
};

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 5;

// score < -0.6 -> 1; [-0.6, -0.2) -> 2; [-0.2, 0.2] -> 3; (0.2, 0.6] -> 4; > 0.6 -> 5
inline int level_for_score(double score) {
  if (score < -0.6) return 1;
  if (score < -0.2) return 2;
  if (score <= 0.2) return 3;
  if (score <= 0.6) return 4;
  return 5;
}

inline const char* level_name(int level) {
  switch (level) {
    case 1: return "very risk-averse";
    case 2: return "risk-averse";
    case 3: return "balanced";
    case 4: return "risk-seeking";
    case 5: return "very risk-seeking";
  }
  return "unknown";
}

namespace detail {

// Sums in feature_id order so the score does not depend on question order.
inline void rescore(RiskDecision& d) {
  std::vector<const FeatureContribution*> kept;
  for (const auto& c : d.contributions)
    if (!d.excluded.count(c.feature_id)) kept.push_back(&c);
  std::sort(kept.begin(), kept.end(), [](const auto* a, const auto* b) { return a->feature_id < b->feature_id; });
  double weighted = 0.0;
  double total_weight = 0.0;
  for (const auto* c : kept) {
    weighted += c->contribution;
    total_weight += c->weight;
  }
  d.score = total_weight > 0.0 ? weighted / total_weight : 0.0;
  d.level = level_for_score(d.score);
}

}  // namespace detail

inline void validate(const Questionnaire& q) {
  if (q.questions.empty()) throw Error(Errc::kInvalidArgument, "questionnaire is empty");
  std::set<std::string> ids;
  for (const auto& question : q.questions) {
    validate(question);
    if (!ids.insert(question.question_id).second)
      throw Error(Errc::kInvalidArgument, "duplicate question '" + question.question_id + "'");
  }
  for (const auto& [id, w] : q.weights) {
    if (!ids.count(id)) throw Error(Errc::kInvalidArgument, "weight for unknown question '" + id + "'");
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::kInvalidArgument, "weight of '" + id + "' must be >= 0");
  }
  for (const auto& id : ids)
    if (!q.weights.count(id)) throw Error(Errc::kInvalidArgument, "missing weight for '" + id + "'");
}

// One contribution per question, in questionnaire order.
inline RiskDecision classify_risk(const Answers& answers, const Questionnaire& questionnaire) {
  RiskDecision d;
  for (const auto& q : questionnaire.questions) {
    auto it = answers.find(q.question_id);
    if (it == answers.end()) throw Error(Errc::kMissingAnswer, q.question_id);
    const auto* option = q.find_option(it->second);
    if (!option) throw Error(Errc::kUnknownOption, "'" + it->second + "' for question '" + q.question_id + "'");
    const double weight = questionnaire.weights.at(q.question_id);
    d.contributions.push_back({q.question_id, q.label.empty() ? q.question_id : q.label, option->option_id,
                               weight, option->tendency, weight * option->tendency});
  }
  for (const auto& [qid, oid] : answers)
    if (!questionnaire.find(qid)) throw Error(Errc::kUnknownOption, "answer for unknown question '" + qid + "'");
  detail::rescore(d);
  return d;
}

// Alternates negative and non-negative contributions, each class sorted by
// descending |contribution| then ascending feature_id, starting with the
// class that holds the largest |contribution|.
inline std::vector<std::string> order_features(const std::vector<FeatureContribution>& contributions) {
  auto by_magnitude = [](const FeatureContribution* a, const FeatureContribution* b) {
    const double ma = std::abs(a->contribution), mb = std::abs(b->contribution);
    if (ma != mb) return ma > mb;
    return a->feature_id < b->feature_id;
  };
  std::vector<const FeatureContribution*> negative, non_negative;
  for (const auto& c : contributions) (c.contribution < 0.0 ? negative : non_negative).push_back(&c);
  std::sort(negative.begin(), negative.end(), by_magnitude);
  std::sort(non_negative.begin(), non_negative.end(), by_magnitude);

  bool take_negative = false;
  if (!negative.empty() && !non_negative.empty())
    take_negative = by_magnitude(negative.front(), non_negative.front());
  else
    take_negative = !negative.empty();

  std::vector<std::string> order;
  std::size_t ni = 0, pi = 0;
  while (ni < negative.size() || pi < non_negative.size()) {
    const bool negative_left = ni < negative.size();
    const bool positive_left = pi < non_negative.size();
    if ((take_negative && negative_left) || !positive_left)
      order.push_back(negative[ni++]->feature_id);
    else
      order.push_back(non_negative[pi++]->feature_id);
    take_negative = !take_negative;
  }
  return order;
}

// Weighted mean over the remaining features. The input is not modified.
inline RiskDecision counterfactual(const RiskDecision& decision, const std::set<std::string>& exclude) {
  for (const auto& id : exclude)
    if (!decision.find(id)) throw Error(Errc::kInvalidArgument, "cannot exclude unknown feature '" + id + "'");
  RiskDecision out = decision;
  out.excluded.insert(exclude.begin(), exclude.end());
  const bool any_left = std::any_of(out.contributions.begin(), out.contributions.end(),
                                    [&](const auto& c) { return !out.excluded.count(c.feature_id); });
  if (!any_left) throw Error(Errc::kAllFeaturesExcluded, "no feature remains");
  detail::rescore(out);
  return out;
}

struct InitialAssessment {
  int self_level = 3;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const InitialAssessment&, const InitialAssessment&) = default;
};

inline InitialAssessment record_initial_assessment(std::optional<InitialAssessment>& slot, int self_level,
                                                   std::int64_t timestamp_ms) {
  if (slot) throw Error(Errc::kAlreadyRecorded, "initial assessment already recorded");
  if (self_level < kMinLevel || self_level > kMaxLevel)
    throw Error(Errc::kInvalidArgument, "self_level must be in 1..5, got " + std::to_string(self_level));
  slot = InitialAssessment{self_level, timestamp_ms};
  return *slot;
}

}  // namespace ge
