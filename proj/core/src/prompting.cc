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

#include "confra/prompting.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <regex>
#include <set>
#include <thread>
#include <utility>

#include "confra/error.h"
#include "confra/fileio.h"
#include "confra/text.h"
#include "httplib.h"

namespace confra {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kModule[] = "prompting";

// ---------------------------------------------------------------------------
// Template text

constexpr std::string_view kPreamble =
    R"(Role. You are an expert annotator. For each Telegram message: return only JSON.

Task
- Decide if the input text is conspiratorial.
- Provide a short rationale summarizing your decision.
- Give a confidence score between 0 and 1 (inclusive, use decimals).
- If conspiratorial, extract labeled spans.

Definition
- Conspiracy theory: An event is the result of a group acting in secret according to a plan, causing harm to a group of victims. If not stopped, it leads to catastrophe, so action is urged.
- A text is conspiratorial if there is at least one identifiable plan/event attributed to an out-group (may be implied) that harms an in-group (may be implied).
- If only non-core elements exist (especially just a call_to_action), the text is not conspiratorial.

Core Requirement
- When is_conspiratorial is true, include at least one span labeled plan_event or secret.

Span Labels
- plan_event (core): action/event/circumstance that constitutes the harmful plan.
- secret (core): secrecy/hidden coordination cues (e.g., secret, covert, hidden agenda).
- out_group (optional): alleged perpetrators/enemy.
- in_group (optional): victims/"us".
- call_to_action (optional): imperative/prescription to counter the plan.

Span Text Rules
- Extract exact substrings from the input text.
- Do NOT include surrounding quotes or trailing punctuation in span text.
- Span text must be continuous.
- The same substring may appear in multiple spans with different labels when it fulfills multiple roles (overlapping spans are allowed).
)";

constexpr std::string_view kFrameHintNote = R"(
Frame Hints
Some examples include frame hints for core spans (plan_event, secret). These are provided to give you extra context but should not be added to the JSON output.
)";

constexpr std::string_view kSchema = R"(
Output JSON Schema
{
  "is_conspiratorial": boolean,
  "rationale_short": string,
  "confidence": number,
  "spans": [
    {
      "label": "plan_event" | "secret" | "out_group" | "in_group" | "call_to_action",
      "text": string
    }
  ]
}
)";

constexpr std::string_view kExamplesHeading = "\nFew-shot Examples\n";
constexpr std::string_view kInputHeading = "\nInput\n";
constexpr std::string_view kClosing = "\n\nOutput\nReturn only the JSON.\n";

constexpr char kStubNegative[] =
    R"({"is_conspiratorial": false, "rationale_short": "No conspiratorial plan described.", "confidence": 0.0, "spans": []})";

void AppendExample(const FewShotExample& ex, bool with_hints,
                   std::string* out) {
  *out += '\n';
  *out += ex.title;
  *out += "\nInput:\n";
  *out += ex.input_text;
  *out += "\n\n";
  if (with_hints && !ex.frame_hints.empty()) {
    *out += "Frame hints:\n";
    for (const auto& [label, frames] : ex.frame_hints) {
      *out += fmt::format("- {}: {}\n", LabelName(label),
                          fmt::join(frames, ", "));
    }
    *out += '\n';
  }
  *out += "Output:\n";
  *out += ex.expected_output;
  *out += '\n';
}

std::string PromptPrefix(PromptStrategy strategy,
                         std::span<const FewShotExample> examples) {
  std::string out(kPreamble);
  const bool guided = strategy == PromptStrategy::kFrameGuided;
  if (guided) out += kFrameHintNote;
  out += kSchema;
  if (strategy != PromptStrategy::kZeroShot) {
    out += kExamplesHeading;
    for (const FewShotExample& ex : examples) AppendExample(ex, guided, &out);
  }
  out += kInputHeading;
  return out;
}

void RequireExamples(PromptStrategy strategy,
                     std::span<const FewShotExample> examples) {
  if (strategy == PromptStrategy::kZeroShot) return;
  if (examples.size() != kCanonicalExampleCount) {
    throw Error(ErrorCode::kConfigError, kModule,
                fmt::format("{} prompt needs {} examples, got {}",
                            StrategyName(strategy), kCanonicalExampleCount,
                            examples.size()));
  }
}

}  // namespace

std::string BuildPrompt(PromptStrategy strategy, std::string_view message_text,
                        std::span<const FewShotExample> examples) {
  RequireExamples(strategy, examples);
  std::string out = PromptPrefix(strategy, examples);
  out += message_text;
  out += kClosing;
  return out;
}

std::optional<std::string> ExtractPromptInput(
    std::string_view prompt, std::span<const FewShotExample> examples) {
  for (PromptStrategy s : {PromptStrategy::kZeroShot, PromptStrategy::kFewShot,
                           PromptStrategy::kFrameGuided}) {
    if (s != PromptStrategy::kZeroShot &&
        examples.size() != kCanonicalExampleCount) {
      continue;
    }
    const std::string prefix = PromptPrefix(s, examples);
    if (prompt.size() >= prefix.size() + kClosing.size() &&
        prompt.starts_with(prefix) && prompt.ends_with(kClosing)) {
      return std::string(prompt.substr(
          prefix.size(), prompt.size() - prefix.size() - kClosing.size()));
    }
  }
  return std::nullopt;
}

void CheckExamples(std::span<const FewShotExample> examples) {
  if (examples.size() != kCanonicalExampleCount) {
    throw Error(ErrorCode::kConfigError, kModule,
                fmt::format("expected {} examples, got {}",
                            kCanonicalExampleCount, examples.size()));
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const FewShotExample& ex = examples[i];
    for (const auto& [label, frames] : ex.frame_hints) {
      if (!IsCore(label)) {
        throw Error(ErrorCode::kConfigError, kModule,
                    fmt::format("example {}: hints for non-core label {}",
                                i + 1, LabelName(label)));
      }
    }
    Message msg{fmt::format("example-{}", i + 1), "", "", ex.input_text};
    RawModelOutput raw;
    raw.message_id = msg.id;
    raw.response_text = ex.expected_output;
    ParseDiagnostics diag;
    try {
      const ModelPrediction p = ParseOutput(raw, msg, {}, &diag);
      if (diag.spans_dropped > 0 || !p.flags.empty()) {
        throw Error(ErrorCode::kConfigError, kModule,
                    fmt::format("example {}: expected output does not fit its "
                                "input ({} span(s) not found)",
                                i + 1, diag.spans_dropped));
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kConfigError) throw;
      throw Error(ErrorCode::kConfigError, kModule,
                  fmt::format("example {}: {}", i + 1, e.what()));
    }
  }
}

// ---------------------------------------------------------------------------
// Frame hints

FrameHints GenerateFrameHints(std::span<const FrameAssignment> assignments,
                              std::size_t top_k) {
  FrameHints hints;
  for (SpanLabel label : {SpanLabel::kPlanEvent, SpanLabel::kSecret}) {
    std::vector<std::string> names;
    for (const FrameRank& r : TopFramesPerLabel(assignments, label, top_k)) {
      names.push_back(r.frame_name);
    }
    if (!names.empty()) hints.emplace(label, std::move(names));
  }
  return hints;
}

FrameHints HintsForExample(const FewShotExample& example,
                           const FrameIndex& index, const LexicalTools& tools,
                           std::size_t top_k) {
  Message msg{"example", "", "", example.input_text};
  RawModelOutput raw;
  raw.message_id = msg.id;
  raw.response_text = example.expected_output;
  const ModelPrediction p = ParseOutput(raw, msg);
  std::vector<FrameAssignment> assignments;
  for (std::size_t i = 0; i < p.spans.size(); ++i) {
    for (FrameAssignment& a : MapSpanToFrames(p.spans[i], i, msg, index, tools)) {
      assignments.push_back(std::move(a));
    }
  }
  return GenerateFrameHints(assignments, top_k);
}

ordered_json ExamplesToJson(std::span<const FewShotExample> examples) {
  ordered_json arr = ordered_json::array();
  for (const FewShotExample& ex : examples) {
    ordered_json hints = ordered_json::object();
    for (const auto& [label, frames] : ex.frame_hints) {
      hints[std::string(LabelName(label))] = frames;
    }
    arr.push_back({{"title", ex.title},
                   {"input_text", ex.input_text},
                   {"expected_output", ex.expected_output},
                   {"frame_hints", std::move(hints)}});
  }
  return arr;
}

std::vector<FewShotExample> ExamplesFromJson(const json& j) {
  std::vector<FewShotExample> out;
  for (const json& e : j) {
    FewShotExample ex;
    ex.title = e.at("title").get<std::string>();
    ex.input_text = e.at("input_text").get<std::string>();
    const json& expected = e.at("expected_output");
    ex.expected_output =
        expected.is_string() ? expected.get<std::string>() : expected.dump(2);
    if (e.contains("frame_hints")) {
      for (const auto& [label, frames] : e.at("frame_hints").items()) {
        ex.frame_hints.emplace(ParseLabel(label),
                               frames.get<std::vector<std::string>>());
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model access

std::string_view ProviderName(Provider p) {
  switch (p) {
    case Provider::kOpenAi: return "openai";
    case Provider::kOllama: return "ollama";
    case Provider::kStub: return "stub";
  }
  return "?";
}

Provider ParseProvider(std::string_view name) {
  if (name == "openai") return Provider::kOpenAi;
  if (name == "ollama") return Provider::kOllama;
  if (name == "stub") return Provider::kStub;
  throw Error(ErrorCode::kConfigError, kModule,
              fmt::format("unknown provider '{}'", name));
}

void ModelConfig::Check() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kConfigError, kModule, msg);
  };
  if (!(temperature >= 0.0)) fail("temperature must be >= 0");
  if (max_concurrent < 1) fail("max_concurrent must be >= 1");
  if (max_tokens < 1) fail("max_tokens must be >= 1");
  if (timeout.count() <= 0) fail("timeout must be positive");
  if (initial_backoff.count() < 0) fail("backoff must be >= 0");
  if (model.empty()) fail("model name is empty");
  if (provider != Provider::kStub && endpoint.empty()) fail("endpoint is empty");
}

ordered_json ToJson(const RawModelOutput& raw) {
  ordered_json j;
  j["message_id"] = raw.message_id;
  j["model_id"] = raw.model_id;
  j["strategy"] = StrategyName(raw.strategy);
  j["response_text"] = raw.response_text;
  j["latency_ms"] = raw.latency_ms;
  j["prompt_tokens"] = raw.prompt_tokens ? json(*raw.prompt_tokens) : json();
  j["completion_tokens"] =
      raw.completion_tokens ? json(*raw.completion_tokens) : json();
  j["attempts"] = raw.attempts;
  return j;
}

RawModelOutput RawOutputFromJson(const json& j) {
  RawModelOutput raw;
  raw.message_id = j.at("message_id").get<std::string>();
  raw.model_id = j.value("model_id", "");
  raw.strategy = ParseStrategy(j.at("strategy").get<std::string>());
  raw.response_text = j.at("response_text").get<std::string>();
  raw.latency_ms = j.value("latency_ms", 0.0);
  if (j.contains("prompt_tokens") && !j["prompt_tokens"].is_null()) {
    raw.prompt_tokens = j["prompt_tokens"].get<int>();
  }
  if (j.contains("completion_tokens") && !j["completion_tokens"].is_null()) {
    raw.completion_tokens = j["completion_tokens"].get<int>();
  }
  raw.attempts = j.value("attempts", 0);
  return raw;
}

HttpModelClient::HttpModelClient(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.Check();
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
}

json HttpModelClient::RequestBody(const ModelConfig& cfg,
                                  const std::string& prompt) {
  // The whole template goes out as one user turn.
  json messages = json::array({{{"role", "user"}, {"content", prompt}}});
  if (cfg.provider == Provider::kOllama) {
    return {{"model", cfg.model},
            {"messages", messages},
            {"stream", false},
            {"options",
             {{"temperature", cfg.temperature},
              {"num_predict", cfg.max_tokens}}}};
  }
  return {{"model", cfg.model},
          {"messages", messages},
          {"temperature", cfg.temperature},
          {"max_tokens", cfg.max_tokens}};
}

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url SplitUrl(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw Error(ErrorCode::kConfigError, kModule,
                fmt::format("endpoint '{}' is not an http(s) URL", url));
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

// Assistant text and token usage for the provider's response shape. Bodies
// of an unexpected shape are kept whole so nothing is lost.
void ReadCompletion(Provider provider, const std::string& body,
                    RawModelOutput* raw) {
  raw->response_text = body;
  const json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return;
  auto get_int = [](const json& obj, const char* key) -> std::optional<int> {
    if (obj.is_object() && obj.contains(key) && obj[key].is_number_integer()) {
      return obj[key].get<int>();
    }
    return std::nullopt;
  };
  if (provider == Provider::kOllama) {
    if (j.contains("message") && j["message"].contains("content") &&
        j["message"]["content"].is_string()) {
      raw->response_text = j["message"]["content"].get<std::string>();
    }
    raw->prompt_tokens = get_int(j, "prompt_eval_count");
    raw->completion_tokens = get_int(j, "eval_count");
    return;
  }
  if (j.contains("choices") && j["choices"].is_array() &&
      !j["choices"].empty()) {
    const json& choice = j["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      raw->response_text = choice["message"]["content"].get<std::string>();
    } else if (choice.contains("text") && choice["text"].is_string()) {
      raw->response_text = choice["text"].get<std::string>();
    }
  }
  if (j.contains("usage")) {
    raw->prompt_tokens = get_int(j["usage"], "prompt_tokens");
    raw->completion_tokens = get_int(j["usage"], "completion_tokens");
  }
}

}  // namespace

RawModelOutput HttpModelClient::Complete(const std::string& prompt,
                                         const std::string& message_id,
                                         PromptStrategy strategy) {
  const Url url = SplitUrl(cfg_.endpoint);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      cfg_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string body = RequestBody(cfg_, prompt).dump();

  RawModelOutput raw;
  raw.message_id = message_id;
  raw.model_id = cfg_.model;
  raw.strategy = strategy;
  std::string last_problem;
  const std::size_t max_attempts = cfg_.retry_budget + 1;
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(cfg_.initial_backoff * (1LL << std::min<std::size_t>(attempt - 2, 20)));
    }
    raw.attempts = static_cast<int>(attempt);
    const auto t0 = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(url.path, headers, body, "application/json");
    const auto t1 = std::chrono::steady_clock::now();
    if (!res) {
      last_problem = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_problem = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::kClientError, kModule,
                  fmt::format("{}: HTTP {} after {} attempt(s): {}",
                              message_id, res->status, attempt,
                              res->body.substr(0, 200)));
    }
    raw.latency_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    ReadCompletion(cfg_.provider, res->body, &raw);
    return raw;
  }
  throw Error(ErrorCode::kTransportFailed, kModule,
              fmt::format("{}: gave up after {} attempt(s), last error: {}",
                          message_id, max_attempts, last_problem));
}

StubModelClient::StubModelClient(std::string model_id,
                                 std::vector<FewShotExample> examples)
    : model_id_(std::move(model_id)), examples_(std::move(examples)) {}

RawModelOutput StubModelClient::Complete(const std::string& prompt,
                                         const std::string& message_id,
                                         PromptStrategy strategy) {
  RawModelOutput raw;
  raw.message_id = message_id;
  raw.model_id = model_id_;
  raw.strategy = strategy;
  raw.attempts = 1;
  raw.response_text = kStubNegative;
  const std::optional<std::string> input = ExtractPromptInput(prompt, examples_);
  if (input) {
    for (const FewShotExample& ex : examples_) {
      if (ex.input_text == *input) {
        raw.response_text = ex.expected_output;
        break;
      }
    }
  }
  return raw;
}

std::unique_ptr<ModelClient> MakeModelClient(const ModelConfig& cfg) {
  cfg.Check();
  if (cfg.provider == Provider::kStub) {
    return std::make_unique<StubModelClient>(cfg.model);
  }
  return std::make_unique<HttpModelClient>(cfg);
}

// ---------------------------------------------------------------------------
// Output parsing

namespace {

// End (exclusive) of the balanced object starting at `open`, honoring JSON
// strings; npos when unbalanced.
std::size_t MatchBrace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::string ReplaceAll(std::string s, std::string_view from,
                       std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

// Drops commas directly followed (modulo whitespace) by '}' or ']', outside
// strings.
std::string DropTrailingCommas(std::string_view s) {
  std::string out;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < s.size()) {
        out += s[++i];
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

std::optional<json> TryParse(std::string_view s) {
  json j = json::parse(s, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

// Scans for objects in `text`; returns the first that parses and counts the
// parseable ones after it.
std::optional<json> FirstObject(std::string_view text, std::size_t* extra) {
  std::optional<json> first;
  std::size_t pos = text.find('{');
  while (pos != std::string_view::npos) {
    const std::size_t end = MatchBrace(text, pos);
    if (end == std::string_view::npos) break;
    std::optional<json> j = TryParse(text.substr(pos, end - pos));
    if (j) {
      if (!first) {
        first = std::move(j);
      } else {
        ++*extra;
      }
    }
    pos = text.find('{', end);
  }
  return first;
}

}  // namespace

json ExtractJsonObject(std::string_view response, ParseDiagnostics* diag) {
  std::size_t extra = 0;
  std::optional<json> j = FirstObject(response, &extra);
  std::vector<std::string> repairs;
  if (!j) {
    std::string fixed(response);
    const std::string before = fixed;
    fixed = ReplaceAll(fixed, "“", "\"");
    fixed = ReplaceAll(fixed, "”", "\"");
    if (fixed != before) repairs.push_back("smart_quotes");
    const std::string no_commas = DropTrailingCommas(fixed);
    if (no_commas != fixed) repairs.push_back("trailing_commas");
    extra = 0;
    j = FirstObject(no_commas, &extra);
  }
  if (!j) {
    throw Error(ErrorCode::kParseFailed, kModule,
                "no JSON object found in model response");
  }
  if (diag) {
    diag->extra_json_objects += extra;
    diag->repairs.insert(diag->repairs.end(), repairs.begin(), repairs.end());
  }
  return *j;
}

namespace {

std::u32string Lower(std::u32string_view s) {
  std::u32string out(s);
  for (char32_t& c : out) c = AsciiLower(c);
  return out;
}

std::u32string StripBoundary(std::u32string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  bool changed = true;
  while (changed && b < e) {
    changed = false;
    while (b < e && (IsSpace(s[b]) || IsQuote(s[b]))) {
      ++b;
      changed = true;
    }
    while (e > b && (IsSpace(s[e - 1]) || IsQuote(s[e - 1]) ||
                     (IsTrailingPunct(s[e - 1]) &&
                      !EndsWithAbbreviation(s.substr(b, e - b))))) {
      --e;
      changed = true;
    }
  }
  return std::u32string(s.substr(b, e - b));
}

// Trims a located range the same way StripBoundary trims a needle.
std::optional<std::pair<std::size_t, std::size_t>> TrimRange(
    std::u32string_view text, std::size_t b, std::size_t e) {
  const std::u32string_view covered = text.substr(b, e - b);
  const std::u32string stripped = StripBoundary(covered);
  if (stripped.empty()) return std::nullopt;
  const std::size_t offset = covered.find(stripped);
  return std::make_pair(b + offset, b + offset + stripped.size());
}

bool IsClaimed(const std::vector<std::size_t>& claimed, std::size_t start) {
  return std::find(claimed.begin(), claimed.end(), start) != claimed.end();
}

std::optional<std::pair<std::size_t, std::size_t>> FindUnclaimed(
    std::u32string_view haystack, std::u32string_view text,
    std::u32string_view needle, const std::vector<std::size_t>& claimed) {
  if (needle.empty()) return std::nullopt;
  std::size_t pos = haystack.find(needle);
  while (pos != std::u32string_view::npos) {
    auto range = TrimRange(text, pos, pos + needle.size());
    if (range && !IsClaimed(claimed, range->first)) return range;
    pos = haystack.find(needle, pos + 1);
  }
  return std::nullopt;
}

// Approximate substring match (Sellers): smallest edit distance over all
// substrings of `text`. On ties the earliest match wins, grown to the last
// end that keeps its start and distance.
std::optional<std::pair<std::size_t, std::size_t>> FuzzyFind(
    std::u32string_view text, std::u32string_view pattern,
    std::size_t max_edits) {
  const std::size_t m = pattern.size();
  if (m == 0) return std::nullopt;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::vector<std::size_t> prev_start(m + 1), cur_start(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    prev[i] = i;
    prev_start[i] = 0;
  }
  std::size_t best = max_edits + 1;
  std::size_t best_start = 0;
  std::size_t best_end = 0;
  for (std::size_t j = 1; j <= text.size(); ++j) {
    cur[0] = 0;
    cur_start[0] = j;
    for (std::size_t i = 1; i <= m; ++i) {
      const std::size_t sub = prev[i - 1] + (pattern[i - 1] == text[j - 1] ? 0 : 1);
      const std::size_t del = prev[i] + 1;   // skip a text char
      const std::size_t ins = cur[i - 1] + 1;  // skip a pattern char
      if (sub <= del && sub <= ins) {
        cur[i] = sub;
        cur_start[i] = prev_start[i - 1];
      } else if (del <= ins) {
        cur[i] = del;
        cur_start[i] = prev_start[i];
      } else {
        cur[i] = ins;
        cur_start[i] = cur_start[i - 1];
      }
    }
    const bool grows = cur[m] == best && j == best_end + 1 && cur_start[m] == best_start;
    if (cur[m] < best || grows) {
      best = cur[m];
      best_start = cur_start[m];
      best_end = j;
    }
    std::swap(prev, cur);
    std::swap(prev_start, cur_start);
  }
  if (best > max_edits || best_end <= best_start) return std::nullopt;
  return std::make_pair(best_start, best_end);
}

}  // namespace

std::optional<std::pair<std::size_t, std::size_t>> LocateSpan(
    std::u32string_view text, std::string_view needle,
    const std::vector<std::size_t>& claimed, const ParseOptions& options) {
  const std::u32string exact = DecodeUtf8(needle);
  if (auto r = FindUnclaimed(text, text, exact, claimed)) return r;
  const std::u32string stripped = StripBoundary(exact);
  if (auto r = FindUnclaimed(text, text, stripped, claimed)) return r;
  const std::u32string lower_text = Lower(text);
  if (auto r = FindUnclaimed(lower_text, text, Lower(exact), claimed)) return r;
  if (auto r = FindUnclaimed(lower_text, text, Lower(stripped), claimed)) {
    return r;
  }
  if (options.fuzzy_spans) {
    const std::u32string pattern = Lower(stripped);
    const auto max_edits = static_cast<std::size_t>(
        std::floor(options.fuzzy_max_error_rate * static_cast<double>(pattern.size())));
    if (auto r = FuzzyFind(lower_text, pattern, max_edits)) {
      auto trimmed = TrimRange(text, r->first, r->second);
      if (trimmed && !IsClaimed(claimed, trimmed->first)) return trimmed;
    }
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void SchemaViolation(const std::string& path,
                                  const std::string& detail) {
  throw Error(ErrorCode::kSchemaViolation, kModule,
              fmt::format("{}: {}", path, detail));
}

std::string NormalizeLabel(std::string s) {
  s = AsciiLower(s);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  s = s.substr(b);
  for (char& c : s) {
    if (c == ' ' || c == '-' || c == '/') c = '_';
  }
  return s;
}

bool ReadBool(const json& j, std::vector<std::string>* repairs) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_string()) {
    const std::string v = AsciiLower(j.get<std::string>());
    if (v == "true" || v == "yes") {
      repairs->push_back("string_boolean");
      return true;
    }
    if (v == "false" || v == "no") {
      repairs->push_back("string_boolean");
      return false;
    }
  }
  SchemaViolation("is_conspiratorial", "expected a boolean, got " + j.dump());
}

double ReadNumber(const json& j, std::vector<std::string>* repairs) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string v = j.get<std::string>();
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (!v.empty() && end == v.c_str() + v.size()) {
      repairs->push_back("string_number");
      return d;
    }
  }
  SchemaViolation("confidence", "expected a number, got " + j.dump());
}

}  // namespace

ModelPrediction ParseOutput(const RawModelOutput& raw, const Message& msg,
                            const ParseOptions& options,
                            ParseDiagnostics* diag) {
  ParseDiagnostics local;
  ParseDiagnostics& d = diag ? *diag : local;
  const json j = ExtractJsonObject(raw.response_text, &d);

  ModelPrediction p;
  p.message_id = msg.id;
  p.model_id = raw.model_id;
  p.strategy = raw.strategy;

  if (!j.contains("is_conspiratorial")) {
    SchemaViolation("is_conspiratorial", "missing");
  }
  p.is_conspiratorial = ReadBool(j["is_conspiratorial"], &d.repairs);
  if (!j.contains("confidence")) SchemaViolation("confidence", "missing");
  p.confidence = ReadNumber(j["confidence"], &d.repairs);
  if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
    SchemaViolation("confidence",
                    fmt::format("{} is outside [0, 1]", p.confidence));
  }
  if (j.contains("rationale_short") && !j["rationale_short"].is_null()) {
    if (!j["rationale_short"].is_string()) {
      SchemaViolation("rationale_short", "expected a string");
    }
    p.rationale_short = j["rationale_short"].get<std::string>();
  }

  json spans = json::array();
  if (j.contains("spans") && !j["spans"].is_null()) {
    spans = j["spans"];
    if (!spans.is_array()) SchemaViolation("spans", "expected an array");
  }

  const std::u32string text = DecodeUtf8(msg.text);
  std::map<std::pair<SpanLabel, std::string>, std::vector<std::size_t>> claimed;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const json& s = spans[i];
    const std::string path = fmt::format("spans[{}]", i);
    if (!s.is_object()) SchemaViolation(path, "expected an object");
    if (!s.contains("label") || !s["label"].is_string()) {
      SchemaViolation(path + ".label", "expected a string");
    }
    if (!s.contains("text") || !s["text"].is_string()) {
      SchemaViolation(path + ".text", "expected a string");
    }
    const std::string raw_label = s["label"].get<std::string>();
    const std::string norm = NormalizeLabel(raw_label);
    const std::optional<SpanLabel> label = TryParseLabel(norm);
    if (!label) {
      SchemaViolation(path + ".label",
                      fmt::format("unknown label '{}'", raw_label));
    }
    if (norm != raw_label) d.repairs.push_back("label_normalized");

    const std::string needle = s["text"].get<std::string>();
    std::vector<std::size_t>& used = claimed[{*label, needle}];
    const auto range = LocateSpan(text, needle, used, options);
    if (!range) {
      ++d.spans_dropped;
      continue;
    }
    used.push_back(range->first);
    Span span;
    span.label = *label;
    span.start = range->first;
    span.end = range->second;
    span.text = EncodeUtf8(
        std::u32string_view(text).substr(span.start, span.end - span.start));
    const bool duplicate =
        std::any_of(p.spans.begin(), p.spans.end(), [&](const Span& o) {
          return o.label == span.label && o.start == span.start &&
                 o.end == span.end;
        });
    if (duplicate) {
      ++d.spans_dropped;
      continue;
    }
    p.spans.push_back(std::move(span));
  }

  if (!p.is_conspiratorial && !p.spans.empty()) {
    p.spans.clear();
    p.flags.push_back("SPANS_ON_NEGATIVE");
  }
  if (p.is_conspiratorial &&
      std::none_of(p.spans.begin(), p.spans.end(),
                   [](const Span& s) { return IsCore(s.label); })) {
    p.flags.push_back("CORE_SPAN_MISSING");
  }
  if (d.spans_dropped > 0) p.flags.push_back("SPANS_UNLOCATED");
  if (d.extra_json_objects > 0) p.flags.push_back("EXTRA_JSON_OBJECTS");
  return p;
}

// ---------------------------------------------------------------------------
// Batch annotation

AnnotationRun AnnotateMessages(std::span<const Message> messages,
                               PromptStrategy strategy,
                               std::span<const FewShotExample> examples,
                               ModelClient& client, std::size_t max_concurrent,
                               const std::filesystem::path& raw_journal,
                               const ParseOptions& options) {
  RequireExamples(strategy, examples);
  if (max_concurrent < 1) {
    throw Error(ErrorCode::kConfigError, kModule, "concurrency must be >= 1");
  }
  AnnotationRun run;
  run.raw_outputs.resize(messages.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;  // guards first_error and the journal
  std::exception_ptr first_error;
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= messages.size()) return;
      try {
        const std::string prompt =
            BuildPrompt(strategy, messages[i].text, examples);
        RawModelOutput raw = client.Complete(prompt, messages[i].id, strategy);
        if (!raw_journal.empty()) {
          std::lock_guard<std::mutex> lock(mu);
          AppendLineDurable(raw_journal, ToJson(raw).dump());
        }
        run.raw_outputs[i] = std::move(raw);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true);
      }
    }
  };
  const std::size_t n_threads = std::min(max_concurrent, std::max<std::size_t>(messages.size(), 1));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  for (std::size_t i = 0; i < messages.size(); ++i) {
    try {
      run.predictions.push_back(
          ParseOutput(run.raw_outputs[i], messages[i], options));
    } catch (const Error& e) {
      run.failures.push_back({messages[i].id, e.qualified_code(), e.what()});
    }
  }
  return run;
}

}  // namespace confra
