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

// Corpus ingestion, anonymization, batch sampling and the JSONL stores for
// corpora, annotations and predictions.

#ifndef CONFRA_CORPUS_H_
#define CONFRA_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "confra/model.h"

namespace confra {

struct CorpusManifest {
  std::map<std::string, std::size_t> counts_per_alias;
  std::string first_timestamp;
  std::string last_timestamp;

  friend bool operator==(const CorpusManifest&,
                         const CorpusManifest&) = default;
};

class Corpus {
 public:
  Corpus() = default;
  // Throws Error(kInvalidRecord) on duplicate ids.
  explicit Corpus(std::vector<Message> messages);

  const std::vector<Message>& messages() const { return messages_; }
  const CorpusManifest& manifest() const { return manifest_; }
  std::size_t size() const { return messages_.size(); }
  bool empty() const { return messages_.empty(); }

  // nullptr when absent.
  const Message* Find(std::string_view id) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.messages_ == b.messages_;
  }

 private:
  std::vector<Message> messages_;
  std::unordered_map<std::string, std::size_t> index_;
  CorpusManifest manifest_;
};

enum class ExportFormat { kAuto, kTelegramExport, kJsonl };

ExportFormat ParseExportFormat(std::string_view name);

// Deterministic alias for a raw channel identifier:
// "ch_" + first 12 hex digits of HMAC-SHA256(salt, channel_id).
std::string ChannelAlias(std::string_view channel_id, std::string_view salt);

// Replaces t.me links, @-mentions and phone numbers with fixed
// placeholders. Idempotent.
std::string Anonymize(std::string_view text);

inline constexpr std::string_view kMentionPlaceholder = "@ANON_MENTION";
inline constexpr std::string_view kLinkPlaceholder = "[ANON_LINK]";
inline constexpr std::string_view kPhonePlaceholder = "[ANON_PHONE]";

// Reads a Telegram desktop export (single chat or full "chats" tree) or a
// flat JSONL of raw messages. Service messages and empty posts are dropped,
// text is anonymized and channels are aliased with `salt`.
// Errors: kParseError (with line/column), kEmptyCorpus, kAlreadyAnonymized
// when the input is already a corpus file.
Corpus LoadExport(const std::filesystem::path& path, ExportFormat format,
                  std::string_view salt);

struct BatchPlan {
  std::size_t batch_size = 0;
  std::size_t per_group = 0;
  std::vector<std::string> groups;  // channel aliases
};

// Throws kInvalidArgument unless per_group * groups.size() == batch_size.
void CheckBatchPlan(const BatchPlan& plan);

// Draws `num_batches` disjoint batches, each holding exactly per_group
// messages from every listed group. Deterministic in `seed`.
// Errors: kInsufficientGroup naming the group.
std::vector<std::vector<Message>> SampleBatches(const Corpus& corpus,
                                                const BatchPlan& plan,
                                                std::size_t num_batches,
                                                std::uint64_t seed);

Corpus ReadCorpus(const std::filesystem::path& path);
void WriteCorpus(const std::filesystem::path& path, const Corpus& corpus);

// When `corpus` is non-null every record is validated against its message;
// failures raise kInvalidRecord with the line number and report.
std::vector<MessageAnnotation> ReadAnnotations(
    const std::filesystem::path& path, const Corpus* corpus = nullptr);
// Refuses to write (kInvalidRecord) if any record fails validation.
void WriteAnnotations(const std::filesystem::path& path,
                      const std::vector<MessageAnnotation>& annotations,
                      const Corpus& corpus);

std::vector<ModelPrediction> ReadPredictions(const std::filesystem::path& path);
void WritePredictions(const std::filesystem::path& path,
                      const std::vector<ModelPrediction>& predictions);

// Converts a byte offset into "line L, column C" (both 1-based).
std::string DescribeOffset(std::string_view content, std::size_t byte_offset);

}  // namespace confra

#endif  // CONFRA_CORPUS_H_
