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

#include <stdexcept>
#include <string>
#include <string_view>

namespace ge {

enum class Errc {
  kParse,
  kNonMonotonicTimestamp,
  kOutOfRange,
  kUnknownSource,
  kInvalidArgument,
  kMissingAnswer,
  kUnknownOption,
  kAllFeaturesExcluded,
  kAlreadyRecorded,
  kUnknownTemplate,
  kMissingSlot,
  kIllegalGroundingTransition,
  kConfig,
  kIo,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kParse: return "ParseError";
    case Errc::kNonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case Errc::kOutOfRange: return "OutOfRange";
    case Errc::kUnknownSource: return "UnknownSource";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kMissingAnswer: return "MissingAnswer";
    case Errc::kUnknownOption: return "UnknownOption";
    case Errc::kAllFeaturesExcluded: return "AllFeaturesExcluded";
    case Errc::kAlreadyRecorded: return "AlreadyRecorded";
    case Errc::kUnknownTemplate: return "UnknownTemplate";
    case Errc::kMissingSlot: return "MissingSlot";
    case Errc::kIllegalGroundingTransition: return "IllegalGroundingTransition";
    case Errc::kConfig: return "ConfigError";
    case Errc::kIo: return "IoError";
  }
  return "Unknown";
}

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ge
