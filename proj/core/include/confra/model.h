// Copyright 2026 The Confra Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Conspiracy Frame domain types and the annotation validity rules.

#ifndef CONFRA_MODEL_H_
#define CONFRA_MODEL_H_

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace confra {

// The five frame elements. plan_event and secret are core.
enum class SpanLabel { kPlanEvent, kSecret, kInGroup, kOutGroup, kCallToAction };

inline constexpr std::array<SpanLabel, 5> kAllLabels = {
    SpanLabel::kPlanEvent, SpanLabel::kSecret, SpanLabel::kOutGroup,
    SpanLabel::kInGroup, SpanLabel::kCallToAction};

std::string_view LabelName(SpanLabel label);
// Throws Error(kUnknownLabel) for anything but the five wire names.
SpanLabel ParseLabel(std::string_view name);
std::optional<SpanLabel> TryParseLabel(std::string_view name);

bool IsCore(SpanLabel label);
std::set<SpanLabel> CoreLabels();

struct Span {
  SpanLabel label = SpanLabel::kPlanEvent;
  std::size_t start = 0;  // scalar offset, inclusive
  std::size_t end = 0;    // scalar offset, exclusive
  std::string text;

  friend bool operator==(const Span&, const Span&) = default;
};

// Anonymized channel aliases carry this prefix.
inline constexpr std::string_view kAliasPrefix = "ch_";

struct Message {
  std::string id;
  std::string channel_alias;
  std::string timestamp;  // ISO-8601 UTC, "YYYY-MM-DDTHH:MM:SSZ"
  std::string text;

  friend bool operator==(const Message&, const Message&) = default;
};

struct MessageAnnotation {
  std::string message_id;
  std::string annotator_id;
  bool is_conspiratorial = false;
  // Annotator's "may support a conspiracy theory" flag. Carried for
  // fidelity; no metric reads it.
  std::optional<bool> supports_ct;
  std::vector<Span> spans;

  friend bool operator==(const MessageAnnotation&,
                         const MessageAnnotation&) = default;
};

enum class PromptStrategy { kZeroShot, kFewShot, kFrameGuided };

std::string_view StrategyName(PromptStrategy strategy);
PromptStrategy ParseStrategy(std::string_view name);

struct ModelPrediction {
  std::string message_id;
  std::string model_id;
  PromptStrategy strategy = PromptStrategy::kZeroShot;
  bool is_conspiratorial = false;
  std::string rationale_short;
  double confidence = 0.0;
  std::vector<Span> spans;
  // Parser diagnostics, e.g. "CORE_SPAN_MISSING".
  std::vector<std::string> flags;

  friend bool operator==(const ModelPrediction&,
                         const ModelPrediction&) = default;
};

// Rule codes reported by ValidateAnnotation.
enum class Rule {
  kSpanOutOfRange,
  kSpanTextMismatch,
  kSpanBoundaryPunctuation,
  kMissingCoreSpan,
  kSpansOnNegative,
  kDuplicateSpan,
  kConfidenceOutOfRange,
};

std::string_view RuleName(Rule rule);

struct Violation {
  Rule rule;
  std::optional<std::size_t> span_index;  // absent for record-level rules
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool Has(Rule rule) const;
  std::string Summary() const;
};

// Checks the span invariants of one span against its message text.
// Boundary characters a span may not start or end with. A trailing period
// is tolerated for dotted abbreviations such as "U.S.".
bool IsQuote(char32_t c);
bool IsTrailingPunct(char32_t c);
bool EndsWithAbbreviation(std::u32string_view s);

void CheckSpan(const Span& span, std::size_t index, const std::u32string& text,
               std::vector<Violation>* out);

// Throws Error(kIdMismatch) when a.message_id != m.id.
ValidationReport ValidateAnnotation(const MessageAnnotation& a,
                                    const Message& m);
ValidationReport ValidatePrediction(const ModelPrediction& p, const Message& m);

// Canonical JSON forms. Span: {"label","start","end","text"}.
nlohmann::ordered_json ToJson(const Span& span);
nlohmann::ordered_json ToJson(const Message& message);
nlohmann::ordered_json ToJson(const MessageAnnotation& annotation);
nlohmann::ordered_json ToJson(const ModelPrediction& prediction);

Span SpanFromJson(const nlohmann::json& j);
Message MessageFromJson(const nlohmann::json& j);
MessageAnnotation AnnotationFromJson(const nlohmann::json& j);
ModelPrediction PredictionFromJson(const nlohmann::json& j);

}  // namespace confra

#endif  // CONFRA_MODEL_H_
