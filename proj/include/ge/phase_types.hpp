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

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ge {

enum class PhaseKind { kAssessment, kExplain, kUnderstanding, kAgreement, kFinalDecision, kDone };

inline constexpr std::size_t kPhaseKindCount = 6;

constexpr std::string_view to_string(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::kAssessment: return "P0_Assessment";
    case PhaseKind::kExplain: return "P1_Explain";
    case PhaseKind::kUnderstanding: return "P2_Understanding";
    case PhaseKind::kAgreement: return "P3_Agreement";
    case PhaseKind::kFinalDecision: return "P4_FinalDecision";
    case PhaseKind::kDone: return "Done";
  }
  return "Done";
}

inline std::optional<PhaseKind> parse_phase_kind(std::string_view text) {
  for (auto k : {PhaseKind::kAssessment, PhaseKind::kExplain, PhaseKind::kUnderstanding, PhaseKind::kAgreement,
                 PhaseKind::kFinalDecision, PhaseKind::kDone})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

// Explain, Understanding and Agreement carry the feature they concern;
// Understanding also carries the clarification attempt counter.
struct Phase {
  PhaseKind kind = PhaseKind::kAssessment;
  std::string feature_id;
  int attempt = 0;

  static Phase assessment() { return {}; }
  static Phase explain(std::string f) { return {PhaseKind::kExplain, std::move(f), 0}; }
  static Phase understanding(std::string f, int attempt) { return {PhaseKind::kUnderstanding, std::move(f), attempt}; }
  static Phase agreement(std::string f) { return {PhaseKind::kAgreement, std::move(f), 0}; }
  static Phase final_decision() { return {PhaseKind::kFinalDecision, {}, 0}; }
  static Phase done() { return {PhaseKind::kDone, {}, 0}; }

  bool has_feature() const {
    return kind == PhaseKind::kExplain || kind == PhaseKind::kUnderstanding || kind == PhaseKind::kAgreement;
  }

  // Same phase up to the attempt counter.
  bool same_step(const Phase& o) const { return kind == o.kind && feature_id == o.feature_id; }

  friend bool operator==(const Phase&, const Phase&) = default;
};

}  // namespace ge
