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

// Prompt construction for the three strategies, frame hints, the
// chat-completion client and the model-output parser.

#ifndef CONFRA_PROMPTING_H_
#define CONFRA_PROMPTING_H_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confra/framemap.h"
#include "confra/lexicon.h"
#include "confra/model.h"
#include "json.hpp"

namespace confra {

using FrameHints = std::map<SpanLabel, std::vector<std::string>>;

struct FewShotExample {
  std::string title;  // heading line shown above the example
  std::string input_text;
  std::string expected_output;  // JSON, rendered verbatim
  FrameHints frame_hints;       // plan_event / secret only

  friend bool operator==(const FewShotExample&,
                         const FewShotExample&) = default;
};

inline constexpr std::size_t kCanonicalExampleCount = 6;
inline constexpr std::string_view kInputPlaceholder = "{{INPUT_TEXT}}";

// The six examples with the hint lists used by the frame-guided prompt.
const std::vector<FewShotExample>& CanonicalExamples();

// Checks count, hint labels and that each expected output parses against its
// own input. Throws Error(kConfigError).
void CheckExamples(std::span<const FewShotExample> examples);

// Renders the strategy's template with `message_text` in place of
// {{INPUT_TEXT}}. Few-shot and frame-guided need exactly six examples
// (CONFIG_ERROR otherwise); hints are rendered only for frame-guided, and
// only on examples that have any.
std::string BuildPrompt(PromptStrategy strategy, std::string_view message_text,
                        std::span<const FewShotExample> examples = {});

// Per core label: frames ranked by count, ties by name, at most `top_k`.
// Labels without frames are omitted.
FrameHints GenerateFrameHints(std::span<const FrameAssignment> assignments,
                              std::size_t top_k = 5);

// Maps the example's own expected core spans through FrameNet.
FrameHints HintsForExample(const FewShotExample& example,
                           const FrameIndex& index, const LexicalTools& tools,
                           std::size_t top_k = 5);

// Reads/writes a list of examples as JSON (used for --examples overrides).
nlohmann::ordered_json ExamplesToJson(std::span<const FewShotExample> examples);
std::vector<FewShotExample> ExamplesFromJson(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Model access

enum class Provider {
  kOpenAi,  // POST {model, messages, temperature, max_tokens}
  kOllama,  // /api/chat with options.temperature / options.num_predict
  kStub,    // in-process, no network; see StubModelClient
};

std::string_view ProviderName(Provider p);
Provider ParseProvider(std::string_view name);

struct ModelConfig {
  std::string endpoint;  // full URL of the chat-completion route
  std::string model;
  Provider provider = Provider::kOpenAi;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::chrono::milliseconds timeout{60000};
  std::size_t max_concurrent = 4;
  std::size_t retry_budget = 3;  // retries after the first attempt
  std::chrono::milliseconds initial_backoff{500};
  std::string api_key_env = "CONFRA_API_KEY";

  // Throws Error(kConfigError) on negative temperature, zero concurrency etc.
  void Check() const;
};

struct RawModelOutput {
  std::string message_id;
  std::string model_id;
  PromptStrategy strategy = PromptStrategy::kZeroShot;
  std::string response_text;  // verbatim assistant content
  double latency_ms = 0.0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  int attempts = 0;

  friend bool operator==(const RawModelOutput&,
                         const RawModelOutput&) = default;
};

nlohmann::ordered_json ToJson(const RawModelOutput& raw);
RawModelOutput RawOutputFromJson(const nlohmann::json& j);

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  // Must be safe to call from several threads at once.
  virtual RawModelOutput Complete(const std::string& prompt,
                                  const std::string& message_id,
                                  PromptStrategy strategy) = 0;
};

// Single request per call with retry on transport errors and HTTP >= 500.
// Throws Error(kClientError) on 4xx, Error(kTransportFailed) when the retry
// budget is exhausted.
class HttpModelClient : public ModelClient {
 public:
  explicit HttpModelClient(ModelConfig cfg);
  RawModelOutput Complete(const std::string& prompt,
                          const std::string& message_id,
                          PromptStrategy strategy) override;

  // Exposed for tests.
  static nlohmann::json RequestBody(const ModelConfig& cfg,
                                    const std::string& prompt);

 private:
  ModelConfig cfg_;
  std::string api_key_;
};

// Answers without a network: if the prompt's input equals one of the given
// examples' input texts, returns that example's expected output; otherwise
// a fixed non-conspiratorial JSON. Latency is reported as zero.
class StubModelClient : public ModelClient {
 public:
  StubModelClient(std::string model_id,
                  std::vector<FewShotExample> examples = CanonicalExamples());
  RawModelOutput Complete(const std::string& prompt,
                          const std::string& message_id,
                          PromptStrategy strategy) override;

 private:
  std::string model_id_;
  std::vector<FewShotExample> examples_;
};

std::unique_ptr<ModelClient> MakeModelClient(const ModelConfig& cfg);

// Message text of a prompt built by BuildPrompt with `examples` (the inverse
// of the {{INPUT_TEXT}} substitution), or nullopt for any other prompt.
std::optional<std::string> ExtractPromptInput(
    std::string_view prompt, std::span<const FewShotExample> examples);

// ---------------------------------------------------------------------------
// Output parsing

struct ParseOptions {
  // Edit-distance span location as a last resort; off by default.
  bool fuzzy_spans = false;
  double fuzzy_max_error_rate = 0.1;
};

struct ParseDiagnostics {
  std::size_t spans_dropped = 0;
  std::size_t extra_json_objects = 0;
  std::vector<std::string> repairs;
};

// First parseable JSON object in the response, after light repairs
// (code fences, smart quotes, trailing commas). Throws Error(kParseFailed).
nlohmann::json ExtractJsonObject(std::string_view response,
                                 ParseDiagnostics* diag = nullptr);

// Locates `needle` in `text` (exact, then stripped, then case-insensitive,
// then optionally fuzzy), skipping start offsets in `claimed`. Returns
// scalar [start, end) already trimmed of boundary quotes and punctuation.
std::optional<std::pair<std::size_t, std::size_t>> LocateSpan(
    std::u32string_view text, std::string_view needle,
    const std::vector<std::size_t>& claimed, const ParseOptions& options = {});

// Throws Error(kParseFailed) / Error(kSchemaViolation) with the field path in
// the message. Unlocatable spans are dropped; CORE_SPAN_MISSING and
// SPANS_ON_NEGATIVE become flags on the kept prediction.
ModelPrediction ParseOutput(const RawModelOutput& raw, const Message& msg,
                            const ParseOptions& options = {},
                            ParseDiagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Batch annotation

struct AnnotationFailure {
  std::string message_id;
  std::string code;  // module-qualified
  std::string detail;
};

struct AnnotationRun {
  std::vector<RawModelOutput> raw_outputs;     // input order
  std::vector<ModelPrediction> predictions;    // input order, parse failures skipped
  std::vector<AnnotationFailure> failures;
};

// Builds prompts, calls `client` with at most cfg.max_concurrent requests in
// flight, journals each raw response to `raw_journal` (when non-empty) as it
// arrives, and parses only after every response is stored. A transport or
// client error aborts the run and is rethrown.
AnnotationRun AnnotateMessages(std::span<const Message> messages,
                               PromptStrategy strategy,
                               std::span<const FewShotExample> examples,
                               ModelClient& client, std::size_t max_concurrent,
                               const std::filesystem::path& raw_journal = {},
                               const ParseOptions& options = {});

}  // namespace confra

#endif  // CONFRA_PROMPTING_H_
