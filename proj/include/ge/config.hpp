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

// Session configuration document: strict JSON schema with defaults.

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ge/detector.hpp"
#include "ge/dialog.hpp"
#include "ge/error.hpp"
#include "ge/json_codec.hpp"
#include "ge/phase.hpp"
#include "ge/risk.hpp"
#include "ge/signal.hpp"
#include "ge/transcript.hpp"

namespace ge {

struct SessionConfig {
  Questionnaire questionnaire;
  DetectorConfig detector;
  std::vector<SourceDescriptor> sources;
  TemplateSet templates = default_templates();
  std::optional<std::string> dialog_service_url;
  TimestampMs dialog_timeout_ms = 5000;
  int dialog_retries = 1;
  TimestampMs presentation_ms = 6000;
  TimestampMs dwell_ms = 1500;
  std::uint64_t seed = 0;

  std::shared_ptr<const SessionRules> rules() const {
    return std::make_shared<const SessionRules>(SessionRules{questionnaire, templates, dialog_service_url.has_value()});
  }
};

namespace config_detail {

class Reader {
 public:
  Reader(const Json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::kConfig, (pointer_.empty() ? std::string("/") : pointer_) + ": " + what);
  }

  Reader at(const std::string& key) const {
    if (!j_.contains(key)) fail("missing required field '" + key + "'");
    return Reader(j_.at(key), pointer_ + "/" + escape(key));
  }

  std::optional<Reader> opt(const std::string& key) const {
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    return Reader(j_.at(key), pointer_ + "/" + escape(key));
  }

  Reader index(std::size_t i) const { return Reader(j_.at(i), pointer_ + "/" + std::to_string(i)); }

  void object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [key, value] : j_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) Reader(value, pointer_ + "/" + escape(key)).fail("unknown field");
    }
  }

  std::size_t array() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  std::int64_t integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<std::int64_t>();
  }

  std::int64_t integer_at_least(std::int64_t lo) const {
    auto v = integer();
    if (v < lo) fail("must be >= " + std::to_string(lo));
    return v;
  }

  const Json& json() const { return j_; }
  const std::string& pointer() const { return pointer_; }

 private:
  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  const Json& j_;
  std::string pointer_;
};

inline Question read_question(const Reader& r) {
  r.object({"question_id", "text", "label", "options"});
  Question q;
  q.question_id = r.at("question_id").string();
  if (q.question_id.empty()) r.at("question_id").fail("must not be empty");
  q.text = r.at("text").string();
  q.label = r.opt("label") ? r.at("label").string() : q.question_id;
  auto options = r.at("options");
  const auto n = options.array();
  if (n < 2) options.fail("needs at least 2 options");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    auto o = options.index(i);
    o.object({"option_id", "label", "tendency"});
    AnswerOption opt;
    opt.option_id = o.at("option_id").string();
    if (!ids.insert(opt.option_id).second) o.at("option_id").fail("duplicate option_id '" + opt.option_id + "'");
    opt.label = o.opt("label") ? o.at("label").string() : opt.option_id;
    opt.tendency = o.at("tendency").number();
    if (opt.tendency < -1.0 || opt.tendency > 1.0) o.at("tendency").fail("must be in [-1, 1]");
    q.options.push_back(std::move(opt));
  }
  return q;
}

inline DetectorConfig read_detector(const Reader& r) {
  r.object({"z_threshold", "detection_window_ms", "baseline_span_ms", "min_baseline_samples", "epsilon_sd",
            "refractory_ms"});
  DetectorConfig d;
  if (auto v = r.opt("z_threshold")) {
    d.z_threshold = v->number();
    if (!(d.z_threshold > 0.0)) v->fail("must be > 0");
  }
  if (auto v = r.opt("detection_window_ms")) d.detection_window_ms = v->integer_at_least(1);
  if (auto v = r.opt("baseline_span_ms")) d.baseline_span_ms = v->integer_at_least(1);
  if (auto v = r.opt("min_baseline_samples")) d.min_baseline_samples = static_cast<std::size_t>(v->integer_at_least(1));
  if (auto v = r.opt("epsilon_sd")) {
    d.epsilon_sd = v->number();
    if (!(d.epsilon_sd > 0.0)) v->fail("must be > 0");
  }
  if (auto v = r.opt("refractory_ms")) d.refractory_ms = v->integer_at_least(0);
  if (d.detection_window_ms > d.baseline_span_ms) r.fail("detection_window_ms must not exceed baseline_span_ms");
  return d;
}

inline SourceDescriptor read_source(const Reader& r) {
  r.object({"source_id", "kind", "units", "expected_rate_hz", "valid_range"});
  auto id = r.at("source_id").string();
  if (id.empty()) r.at("source_id").fail("must not be empty");
  auto kind = parse_source_kind(r.at("kind").string());
  if (!kind) r.at("kind").fail("unknown source kind");
  auto d = default_descriptor(id, *kind);
  if (auto v = r.opt("units")) d.units = v->string();
  if (auto v = r.opt("expected_rate_hz")) {
    d.expected_rate_hz = v->number();
    if (!(d.expected_rate_hz > 0.0)) v->fail("must be > 0");
  }
  if (auto v = r.opt("valid_range")) {
    if (v->array() != 2) v->fail("expected [lo, hi]");
    d.valid_range = {v->index(0).number(), v->index(1).number()};
    if (!(d.valid_range.lo < d.valid_range.hi)) v->fail("requires lo < hi");
  }
  return d;
}

}  // namespace config_detail

// Validates a parsed config document. Errors carry the JSON pointer of the
// offending value.
inline SessionConfig parse_config(const Json& doc) {
  using config_detail::Reader;
  Reader root(doc, "");
  root.object({"v", "questionnaire", "weights", "detector", "sources", "templates", "dialog_service_url",
               "dialog_timeout_ms", "dialog_retries", "presentation_ms", "dwell_ms", "seed"});
  SessionConfig c;
  if (auto v = root.opt("v"); v && v->integer() != 1) v->fail("unsupported version");

  auto questions = root.at("questionnaire");
  const auto nq = questions.array();
  if (nq == 0) questions.fail("must contain at least one question");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < nq; ++i) {
    auto q = config_detail::read_question(questions.index(i));
    if (!ids.insert(q.question_id).second)
      questions.index(i).at("question_id").fail("duplicate question_id '" + q.question_id + "'");
    c.questionnaire.questions.push_back(std::move(q));
  }

  auto weights = root.at("weights");
  if (!weights.json().is_object()) weights.fail("expected an object");
  for (const auto& [key, value] : weights.json().items()) {
    auto w = weights.at(key);
    if (!ids.count(key)) w.fail("weight for unknown question '" + key + "'");
    const double v = w.number();
    if (!(v >= 0.0)) w.fail("must be >= 0");
    c.questionnaire.weights[key] = v;
  }
  for (const auto& id : ids)
    if (!c.questionnaire.weights.count(id)) weights.fail("missing weight for question '" + id + "'");

  if (auto d = root.opt("detector")) c.detector = config_detail::read_detector(*d);

  if (auto s = root.opt("sources")) {
    std::set<std::string> source_ids;
    for (std::size_t i = 0, n = s->array(); i < n; ++i) {
      auto d = config_detail::read_source(s->index(i));
      if (!source_ids.insert(d.source_id).second)
        s->index(i).at("source_id").fail("duplicate source_id '" + d.source_id + "'");
      c.sources.push_back(std::move(d));
    }
  } else {
    c.sources = {default_descriptor("hr", SourceKind::kHeartRateBpm),
                 default_descriptor("face", SourceKind::kFacialArousal)};
  }

  if (auto t = root.opt("templates")) {
    if (!t->json().is_object()) t->fail("expected an object");
    for (const auto& [key, value] : t->json().items()) c.templates[key] = t->at(key).string();
  }

  if (auto u = root.opt("dialog_service_url")) {
    c.dialog_service_url = u->string();
    if (c.dialog_service_url->rfind("http://", 0) != 0) u->fail("only http:// URLs are supported");
  }
  if (auto v = root.opt("dialog_timeout_ms")) c.dialog_timeout_ms = v->integer_at_least(1);
  if (auto v = root.opt("dialog_retries")) c.dialog_retries = static_cast<int>(v->integer_at_least(0));
  if (auto v = root.opt("presentation_ms")) c.presentation_ms = v->integer_at_least(0);
  if (auto v = root.opt("dwell_ms")) c.dwell_ms = v->integer_at_least(0);
  if (auto v = root.opt("seed")) {
    if (!v->json().is_number_unsigned() && !(v->json().is_number_integer() && v->integer() >= 0))
      v->fail("expected a non-negative integer");
    c.seed = v->json().get<std::uint64_t>();
  }
  return c;
}

inline SessionConfig load_config(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(Errc::kConfig, path.string() + ": not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

// GE_DIALOG_URL overrides dialog_service_url; an empty value disables it.
inline void apply_env_overrides(SessionConfig& config) {
  if (const char* url = std::getenv("GE_DIALOG_URL")) {
    if (*url)
      config.dialog_service_url = url;
    else
      config.dialog_service_url.reset();
  }
}

}  // namespace ge
