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

#include "confra/model.h"

#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <tuple>

#include "confra/error.h"
#include "confra/text.h"

namespace confra {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view LabelName(SpanLabel label) {
  switch (label) {
    case SpanLabel::kPlanEvent: return "plan_event";
    case SpanLabel::kSecret: return "secret";
    case SpanLabel::kOutGroup: return "out_group";
    case SpanLabel::kInGroup: return "in_group";
    case SpanLabel::kCallToAction: return "call_to_action";
  }
  return "";
}

std::optional<SpanLabel> TryParseLabel(std::string_view name) {
  for (SpanLabel label : kAllLabels) {
    if (LabelName(label) == name) return label;
  }
  return std::nullopt;
}

SpanLabel ParseLabel(std::string_view name) {
  if (auto label = TryParseLabel(name)) return *label;
  throw Error(ErrorCode::kUnknownLabel, "core",
              fmt::format("unknown span label '{}'", name));
}

bool IsCore(SpanLabel label) {
  return label == SpanLabel::kPlanEvent || label == SpanLabel::kSecret;
}

std::set<SpanLabel> CoreLabels() {
  return {SpanLabel::kPlanEvent, SpanLabel::kSecret};
}

std::string_view StrategyName(PromptStrategy strategy) {
  switch (strategy) {
    case PromptStrategy::kZeroShot: return "zero_shot";
    case PromptStrategy::kFewShot: return "few_shot";
    case PromptStrategy::kFrameGuided: return "frame_guided";
  }
  return "";
}

PromptStrategy ParseStrategy(std::string_view name) {
  for (auto s : {PromptStrategy::kZeroShot, PromptStrategy::kFewShot,
                 PromptStrategy::kFrameGuided}) {
    if (StrategyName(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "core",
              fmt::format("unknown prompt strategy '{}'", name));
}

std::string_view RuleName(Rule rule) {
  switch (rule) {
    case Rule::kSpanOutOfRange: return "SPAN_OUT_OF_RANGE";
    case Rule::kSpanTextMismatch: return "SPAN_TEXT_MISMATCH";
    case Rule::kSpanBoundaryPunctuation: return "SPAN_BOUNDARY_PUNCTUATION";
    case Rule::kMissingCoreSpan: return "MISSING_CORE_SPAN";
    case Rule::kSpansOnNegative: return "SPANS_ON_NEGATIVE";
    case Rule::kDuplicateSpan: return "DUPLICATE_SPAN";
    case Rule::kConfidenceOutOfRange: return "CONFIDENCE_OUT_OF_RANGE";
  }
  return "";
}

bool ValidationReport::Has(Rule rule) const {
  return std::any_of(violations.begin(), violations.end(),
                     [rule](const Violation& v) { return v.rule == rule; });
}

std::string ValidationReport::Summary() const {
  std::string out;
  for (const Violation& v : violations) {
    if (!out.empty()) out += "; ";
    out += RuleName(v.rule);
    if (v.span_index) out += fmt::format("[span {}]", *v.span_index);
    if (!v.detail.empty()) out += ": " + v.detail;
  }
  return out;
}

bool IsQuote(char32_t c) {
  switch (c) {
    case '"': case '\'': case 0x2018: case 0x2019: case 0x201C: case 0x201D:
    case 0x00AB: case 0x00BB: case 0x201E: case 0x2039: case 0x203A:
      return true;
    default:
      return false;
  }
}

bool IsTrailingPunct(char32_t c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
      return true;
    default:
      return false;
  }
}

// "U.S." and "e.g." end in a period that belongs to the word.
bool EndsWithAbbreviation(std::u32string_view s) {
  if (s.size() < 4 || s.back() != '.') return false;
  std::size_t pairs = 0;
  std::size_t i = s.size();
  while (i >= 2 && s[i - 1] == '.' && IsWordChar(s[i - 2]) &&
         (i == 2 || !IsWordChar(s[i - 3]))) {
    ++pairs;
    i -= 2;
  }
  return pairs >= 2;
}

void CheckSpan(const Span& span, std::size_t index, const std::u32string& text,
               std::vector<Violation>* out) {
  if (span.start >= span.end || span.end > text.size()) {
    out->push_back({Rule::kSpanOutOfRange, index,
                    fmt::format("[{}, {}) with text length {}", span.start,
                                span.end, text.size())});
    return;
  }
  const std::u32string_view covered =
      std::u32string_view(text).substr(span.start, span.end - span.start);
  if (EncodeUtf8(covered) != span.text) {
    out->push_back({Rule::kSpanTextMismatch, index,
                    fmt::format("stored '{}' differs from message text",
                                span.text)});
    return;
  }
  if (IsQuote(covered.front()) || IsQuote(covered.back()) ||
      (IsTrailingPunct(covered.back()) && !EndsWithAbbreviation(covered))) {
    out->push_back({Rule::kSpanBoundaryPunctuation, index,
                    fmt::format("'{}'", span.text)});
  }
}

namespace {

void CheckSpans(const std::vector<Span>& spans, bool is_conspiratorial,
                const Message& m, std::vector<Violation>* out) {
  const std::u32string text = DecodeUtf8(m.text);
  std::set<std::tuple<SpanLabel, std::size_t, std::size_t>> seen;
  bool has_core = false;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& span = spans[i];
    CheckSpan(span, i, text, out);
    if (!seen.emplace(span.label, span.start, span.end).second) {
      out->push_back({Rule::kDuplicateSpan, i,
                      fmt::format("{} [{}, {})", LabelName(span.label),
                                  span.start, span.end)});
    }
    has_core = has_core || IsCore(span.label);
  }
  if (is_conspiratorial && !has_core) {
    out->push_back({Rule::kMissingCoreSpan, std::nullopt,
                    "conspiratorial without a plan_event or secret span"});
  }
  if (!is_conspiratorial && !spans.empty()) {
    out->push_back({Rule::kSpansOnNegative, std::nullopt,
                    fmt::format("{} spans on a non-conspiratorial record",
                                spans.size())});
  }
}

}  // namespace

ValidationReport ValidateAnnotation(const MessageAnnotation& a,
                                    const Message& m) {
  if (a.message_id != m.id) {
    throw Error(ErrorCode::kIdMismatch, "core",
                fmt::format("annotation for '{}' checked against message '{}'",
                            a.message_id, m.id));
  }
  ValidationReport report;
  CheckSpans(a.spans, a.is_conspiratorial, m, &report.violations);
  return report;
}

ValidationReport ValidatePrediction(const ModelPrediction& p,
                                    const Message& m) {
  if (p.message_id != m.id) {
    throw Error(ErrorCode::kIdMismatch, "core",
                fmt::format("prediction for '{}' checked against message '{}'",
                            p.message_id, m.id));
  }
  ValidationReport report;
  CheckSpans(p.spans, p.is_conspiratorial, m, &report.violations);
  if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
    report.violations.push_back({Rule::kConfidenceOutOfRange, std::nullopt,
                                 fmt::format("{}", p.confidence)});
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

ordered_json ToJson(const Span& span) {
  ordered_json j;
  j["label"] = LabelName(span.label);
  j["start"] = span.start;
  j["end"] = span.end;
  j["text"] = span.text;
  return j;
}

ordered_json ToJson(const Message& message) {
  ordered_json j;
  j["id"] = message.id;
  j["channel_alias"] = message.channel_alias;
  j["timestamp"] = message.timestamp;
  j["text"] = message.text;
  return j;
}

namespace {

ordered_json SpansToJson(const std::vector<Span>& spans) {
  ordered_json arr = ordered_json::array();
  for (const Span& s : spans) arr.push_back(ToJson(s));
  return arr;
}

template <typename T>
T Field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw Error(ErrorCode::kParseError, "core",
                fmt::format("missing field '{}'", name));
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "core",
                fmt::format("field '{}': {}", name, e.what()));
  }
}

std::vector<Span> SpansFromJson(const json& j) {
  std::vector<Span> spans;
  auto it = j.find("spans");
  if (it == j.end() || it->is_null()) return spans;
  if (!it->is_array()) {
    throw Error(ErrorCode::kParseError, "core", "'spans' is not an array");
  }
  for (const json& s : *it) spans.push_back(SpanFromJson(s));
  return spans;
}

}  // namespace

ordered_json ToJson(const MessageAnnotation& a) {
  ordered_json j;
  j["message_id"] = a.message_id;
  j["annotator_id"] = a.annotator_id;
  j["is_conspiratorial"] = a.is_conspiratorial;
  if (a.supports_ct) {
    j["supports_ct"] = *a.supports_ct;
  } else {
    j["supports_ct"] = nullptr;
  }
  j["spans"] = SpansToJson(a.spans);
  return j;
}

ordered_json ToJson(const ModelPrediction& p) {
  ordered_json j;
  j["message_id"] = p.message_id;
  j["model_id"] = p.model_id;
  j["strategy"] = StrategyName(p.strategy);
  j["is_conspiratorial"] = p.is_conspiratorial;
  j["rationale_short"] = p.rationale_short;
  j["confidence"] = p.confidence;
  j["spans"] = SpansToJson(p.spans);
  if (!p.flags.empty()) j["flags"] = p.flags;
  return j;
}

Span SpanFromJson(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kParseError, "core", "span is not an object");
  }
  Span s;
  s.label = ParseLabel(Field<std::string>(j, "label"));
  s.start = Field<std::size_t>(j, "start");
  s.end = Field<std::size_t>(j, "end");
  s.text = Field<std::string>(j, "text");
  return s;
}

Message MessageFromJson(const json& j) {
  Message m;
  m.id = Field<std::string>(j, "id");
  m.channel_alias = Field<std::string>(j, "channel_alias");
  m.timestamp = Field<std::string>(j, "timestamp");
  m.text = Field<std::string>(j, "text");
  return m;
}

MessageAnnotation AnnotationFromJson(const json& j) {
  MessageAnnotation a;
  a.message_id = Field<std::string>(j, "message_id");
  a.annotator_id = Field<std::string>(j, "annotator_id");
  a.is_conspiratorial = Field<bool>(j, "is_conspiratorial");
  if (auto it = j.find("supports_ct"); it != j.end() && !it->is_null()) {
    a.supports_ct = Field<bool>(j, "supports_ct");
  }
  a.spans = SpansFromJson(j);
  return a;
}

ModelPrediction PredictionFromJson(const json& j) {
  ModelPrediction p;
  p.message_id = Field<std::string>(j, "message_id");
  p.model_id = Field<std::string>(j, "model_id");
  p.strategy = ParseStrategy(Field<std::string>(j, "strategy"));
  p.is_conspiratorial = Field<bool>(j, "is_conspiratorial");
  p.rationale_short = Field<std::string>(j, "rationale_short");
  p.confidence = Field<double>(j, "confidence");
  p.spans = SpansFromJson(j);
  if (j.contains("flags")) p.flags = Field<std::vector<std::string>>(j, "flags");
  return p;
}

}  // namespace confra
