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

#include <gtest/gtest.h>

#include "ge/risk.hpp"
#include "oracle.hpp"

namespace ge {
namespace {

// One question per (id, weight, tendency); the chosen option is "a".
struct Spec {
  std::string id;
  double weight;
  double tendency;
};

Questionnaire make(const std::vector<Spec>& specs) {
  Questionnaire q;
  for (const auto& s : specs) {
    q.questions.push_back({s.id, s.id + "?", s.id, {{"a", "a", s.tendency}, {"b", "b", -s.tendency}}});
    q.weights[s.id] = s.weight;
  }
  return q;
}

Answers choose_a(const std::vector<Spec>& specs) {
  Answers a;
  for (const auto& s : specs) a[s.id] = "a";
  return a;
}

RiskDecision classify(const std::vector<Spec>& specs) { return classify_risk(choose_a(specs), make(specs)); }

TEST(Classify, NeutralAnswers) {
  const auto d = classify({{"x", 1, 0}, {"y", 2, 0}});
  EXPECT_EQ(d.score, 0.0);
  EXPECT_EQ(d.level, 3);
}

TEST(Classify, Symmetry) {
  const auto d = classify({{"x", 1, 1}, {"y", 1, -1}});
  EXPECT_EQ(d.score, 0.0);
  EXPECT_EQ(d.level, 3);
}

TEST(Classify, WeightedMean) {
  const auto d = classify({{"x", 2, 1}, {"y", 1, -0.5}, {"z", 1, -0.5}});
  EXPECT_DOUBLE_EQ(d.score, 0.25);
  EXPECT_EQ(d.level, 4);
}

TEST(Classify, Contributions) {
  const auto d = classify({{"x", 2, -0.5}, {"y", 0, 1}});
  ASSERT_EQ(d.contributions.size(), 2u);
  EXPECT_EQ(d.find("x")->contribution, -1.0);
  EXPECT_EQ(d.find("y")->contribution, 0.0);
  EXPECT_EQ(d.find("x")->option_id, "a");
}

TEST(Classify, ZeroTotalWeight) {
  const auto d = classify({{"x", 0, 1}, {"y", 0, -1}});
  EXPECT_EQ(d.score, 0.0);
  EXPECT_EQ(d.level, 3);
}

TEST(Classify, MissingOrUnknownAnswers) {
  const std::vector<Spec> specs = {{"x", 1, 1}, {"y", 1, -1}};
  Answers a = {{"x", "a"}};
  try {
    classify_risk(a, make(specs));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kMissingAnswer);
  }
  a["y"] = "nope";
  try {
    classify_risk(a, make(specs));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnknownOption);
  }
}

TEST(Levels, Breakpoints) {
  for (double s : {-1.0, -0.61, -0.6, -0.2, -0.19, 0.0, 0.2, 0.21, 0.6, 0.61, 1.0})
    EXPECT_EQ(level_for_score(s), ge_test::oracle_level(s)) << s;
  EXPECT_EQ(level_for_score(-0.6), 2);
  EXPECT_EQ(level_for_score(0.6), 4);
}

TEST(Questionnaire, Validation) {
  auto q = make({{"x", 1, 1}});
  q.weights["ghost"] = 1;
  EXPECT_THROW(validate(q), Error);
  q = make({{"x", 1, 1}});
  q.weights["x"] = -1;
  EXPECT_THROW(validate(q), Error);
  q = make({{"x", 1, 1}});
  q.questions[0].options.pop_back();
  EXPECT_THROW(validate(q), Error);
  q = make({{"x", 1, 1}});
  q.questions[0].options[1].option_id = "a";
  EXPECT_THROW(validate(q), Error);
}

std::vector<FeatureContribution> contributions(const std::vector<std::pair<std::string, double>>& c) {
  std::vector<FeatureContribution> out;
  for (const auto& [id, v] : c) out.push_back({id, id, "a", 1.0, v, v});
  return out;
}

TEST(Order, AlternatesSignClasses) {
  EXPECT_EQ(order_features(contributions({{"a", 0.8}, {"b", -0.6}, {"c", 0.3}, {"d", -0.1}})),
            (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(order_features(contributions({{"a", 0.1}, {"b", -0.6}, {"c", 0.3}})),
            (std::vector<std::string>{"b", "c", "a"}));
}

TEST(Order, OneClass) {
  EXPECT_EQ(order_features(contributions({{"a", 0.1}, {"b", 0.6}, {"c", 0.3}})),
            (std::vector<std::string>{"b", "c", "a"}));
  EXPECT_EQ(order_features(contributions({{"only", -0.2}})), (std::vector<std::string>{"only"}));
}

TEST(Counterfactual, Identity) {
  const auto d = classify({{"x", 2, 1}, {"y", 1, -0.5}});
  const auto c = counterfactual(d, {});
  EXPECT_EQ(c.score, d.score);
  EXPECT_EQ(c.level, d.level);
}

TEST(Counterfactual, GenderExample) {
  const auto d = classify({{"gender", 1, -1}, {"income", 1, 1}});
  const auto c = counterfactual(d, {"gender"});
  EXPECT_EQ(c.score, 1.0);
  EXPECT_EQ(c.level, 5);
  EXPECT_EQ(c.excluded, (std::set<std::string>{"gender"}));
  EXPECT_EQ(d.score, 0.0);
}

TEST(Counterfactual, ZeroWeightNeutral) {
  const auto d = classify({{"x", 2, 1}, {"y", 1, -0.5}, {"z", 0, -1}});
  const auto c = counterfactual(d, {"z"});
  EXPECT_EQ(c.score, d.score);
  EXPECT_EQ(c.level, d.level);
}

TEST(Counterfactual, Errors) {
  const auto d = classify({{"x", 1, 1}});
  try {
    counterfactual(d, {"x"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kAllFeaturesExcluded);
  }
  EXPECT_THROW(counterfactual(d, {"nope"}), Error);
}

TEST(Counterfactual, MatchesOracle) {
  const std::vector<Spec> specs = {{"a", 1, 0.5}, {"b", 2, -1}, {"c", 0.5, 0.25}, {"d", 3, 0.75}};
  const auto d = classify(specs);
  std::vector<ge_test::OracleFeature> of;
  for (const auto& s : specs) of.push_back({s.id, s.weight, s.tendency});
  for (const std::set<std::string>& ex : std::vector<std::set<std::string>>{{}, {"a"}, {"b", "d"}, {"a", "b", "c"}}) {
    const auto c = counterfactual(d, ex);
    const double expected = ge_test::oracle_score(of, {ex.begin(), ex.end()});
    EXPECT_NEAR(c.score, expected, 1e-15);
    EXPECT_EQ(c.level, ge_test::oracle_level(expected));
  }
}

TEST(InitialAssessment, RecordOnce) {
  std::optional<InitialAssessment> slot;
  EXPECT_EQ(record_initial_assessment(slot, 3, 100).self_level, 3);
  try {
    record_initial_assessment(slot, 4, 200);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kAlreadyRecorded);
  }
  std::optional<InitialAssessment> fresh;
  EXPECT_THROW(record_initial_assessment(fresh, 6, 0), Error);
  EXPECT_THROW(record_initial_assessment(fresh, 0, 0), Error);
  EXPECT_FALSE(fresh.has_value());
}

}  // namespace
}  // namespace ge
