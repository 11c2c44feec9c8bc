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

#include "confra/corpus.h"

#include <fmt/format.h>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <random>
#include <regex>
#include <set>

#include "confra/error.h"
#include "confra/fileio.h"
#include "confra/rng.h"

namespace confra {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::vector<Message> messages) : messages_(std::move(messages)) {
  for (std::size_t i = 0; i < messages_.size(); ++i) {
    const Message& m = messages_[i];
    if (!index_.emplace(m.id, i).second) {
      throw Error(ErrorCode::kInvalidRecord, "corpus",
                  fmt::format("duplicate message id '{}'", m.id));
    }
    ++manifest_.counts_per_alias[m.channel_alias];
    if (manifest_.first_timestamp.empty() ||
        m.timestamp < manifest_.first_timestamp) {
      manifest_.first_timestamp = m.timestamp;
    }
    if (m.timestamp > manifest_.last_timestamp) {
      manifest_.last_timestamp = m.timestamp;
    }
  }
}

const Message* Corpus::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &messages_[it->second];
}

ExportFormat ParseExportFormat(std::string_view name) {
  if (name == "telegram-export") return ExportFormat::kTelegramExport;
  if (name == "jsonl") return ExportFormat::kJsonl;
  if (name == "auto") return ExportFormat::kAuto;
  throw Error(ErrorCode::kInvalidArgument, "corpus",
              fmt::format("unknown format '{}'", name));
}

std::string ChannelAlias(std::string_view channel_id, std::string_view salt) {
  return std::string(kAliasPrefix) +
         HmacSha256Hex(salt, channel_id).substr(0, 12);
}

// ---------------------------------------------------------------------------
// Anonymization

namespace {

const std::regex& LinkPattern() {
  static const std::regex re(
      R"((?:https?://)?(?:www\.)?(?:t\.me|telegram\.me|telegram\.dog)/[A-Za-z0-9_+\-/]+)",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

// The leading group keeps e-mail addresses and "@@" runs out of the match.
const std::regex& MentionPattern() {
  static const std::regex re(R"((^|[^A-Za-z0-9_.@])@[A-Za-z0-9_]{3,32})");
  return re;
}

const std::regex& PhonePattern() {
  static const std::regex re(
      R"(\+\d[\d \-().]{6,}\d|\(?\b\d{3}\)?[ \-.]\d{3}[ \-.]\d{4}\b)");
  return re;
}

std::string ReplaceAll(const std::string& text, const std::regex& re,
                       const std::string& replacement) {
  return std::regex_replace(text, re, replacement);
}

}  // namespace

std::string Anonymize(std::string_view text) {
  // A placeholder can expose a new match boundary ("+123456789@abc"), so
  // passes repeat until the text is stable.
  std::string out(text);
  for (;;) {
    std::string next = ReplaceAll(out, LinkPattern(),
                                  std::string(kLinkPlaceholder));
    next = ReplaceAll(next, MentionPattern(),
                      "$1" + std::string(kMentionPlaceholder));
    next = ReplaceAll(next, PhonePattern(), std::string(kPhonePlaceholder));
    if (next == out) return out;
    out = std::move(next);
  }
}

// ---------------------------------------------------------------------------
// Ingest

std::string DescribeOffset(std::string_view content, std::size_t byte_offset) {
  byte_offset = std::min(byte_offset, content.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte_offset; ++i) {
    if (content[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return fmt::format("line {}, column {}", line, col);
}

namespace {

std::string FormatUtc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Accepts "YYYY-MM-DDTHH:MM:SS" with an optional "Z" or "+HH:MM" suffix;
// naive times are taken as UTC.
std::string NormalizeTimestamp(const std::string& s) {
  std::tm tm{};
  int off_h = 0;
  int off_m = 0;
  char sign = 0;
  const int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c%d:%d",
                            &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                            &tm.tm_min, &tm.tm_sec, &sign, &off_h, &off_m);
  if (n < 6) {
    throw Error(ErrorCode::kParseError, "corpus",
                fmt::format("unparseable timestamp '{}'", s));
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  std::time_t t = timegm(&tm);
  if (n >= 8 && (sign == '+' || sign == '-')) {
    const long offset = off_h * 3600L + off_m * 60L;
    t += (sign == '+') ? -offset : offset;
  }
  return FormatUtc(t);
}

std::string TimestampOf(const json& m) {
  if (auto it = m.find("date_unixtime"); it != m.end()) {
    const long long secs = it->is_string() ? std::stoll(it->get<std::string>())
                                           : it->get<long long>();
    return FormatUtc(static_cast<std::time_t>(secs));
  }
  for (const char* key : {"timestamp", "date"}) {
    if (auto it = m.find(key); it != m.end()) {
      if (it->is_number()) {
        return FormatUtc(static_cast<std::time_t>(it->get<long long>()));
      }
      return NormalizeTimestamp(it->get<std::string>());
    }
  }
  return "1970-01-01T00:00:00Z";
}

// Telegram "text" is a string or an array of strings and entity objects.
std::string FlattenText(const json& text) {
  if (text.is_string()) return text.get<std::string>();
  std::string out;
  if (text.is_array()) {
    for (const json& part : text) {
      if (part.is_string()) {
        out += part.get<std::string>();
      } else if (part.is_object() && part.contains("text")) {
        out += part["text"].get<std::string>();
      }
    }
  }
  return out;
}

std::string IdString(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

bool IsBlank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  });
}

void IngestChat(const json& chat, std::string_view salt,
                std::vector<Message>* out) {
  std::string channel;
  if (chat.contains("id")) {
    channel = IdString(chat["id"]);
  } else if (chat.contains("name")) {
    channel = chat["name"].get<std::string>();
  } else {
    throw Error(ErrorCode::kParseError, "corpus", "chat without id or name");
  }
  const std::string alias = ChannelAlias(channel, salt);
  auto it = chat.find("messages");
  if (it == chat.end()) return;
  for (const json& m : *it) {
    if (m.value("type", "message") != "message") continue;
    std::string text = FlattenText(m.value("text", json()));
    if (IsBlank(text)) continue;
    Message msg;
    msg.id = alias + "-" + IdString(m.at("id"));
    msg.channel_alias = alias;
    msg.timestamp = TimestampOf(m);
    msg.text = Anonymize(text);
    out->push_back(std::move(msg));
  }
}

json ParseJson(const std::string& content, const fs::path& path,
               std::size_t line_offset = 0) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    std::string where = DescribeOffset(content, e.byte == 0 ? 0 : e.byte - 1);
    if (line_offset > 0) where = fmt::format("line {}", line_offset);
    throw Error(ErrorCode::kParseError, "corpus",
                fmt::format("{}: {}: {}", path.string(), where, e.what()));
  }
}

std::vector<Message> IngestTelegram(const std::string& content,
                                    const fs::path& path,
                                    std::string_view salt) {
  const json root = ParseJson(content, path);
  std::vector<Message> out;
  if (root.contains("messages")) {
    IngestChat(root, salt, &out);
  } else {
    for (const char* key : {"chats", "left_chats"}) {
      if (auto it = root.find(key); it != root.end() && it->contains("list")) {
        for (const json& chat : (*it)["list"]) IngestChat(chat, salt, &out);
      }
    }
  }
  return out;
}

std::vector<Message> IngestJsonl(const std::string& content,
                                 const fs::path& path, std::string_view salt) {
  std::vector<Message> out;
  const std::vector<std::string> lines = SplitLines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (IsBlank(lines[i])) continue;
    const json rec = ParseJson(lines[i], path, i + 1);
    if (rec.contains("channel_alias")) {
      throw Error(ErrorCode::kAlreadyAnonymized, "corpus",
                  fmt::format("{}: line {}: input is already an anonymized "
                              "corpus; re-anonymizing would shift offsets",
                              path.string(), i + 1));
    }
    if (rec.value("type", "message") != "message") continue;
    std::string channel;
    for (const char* key : {"channel_id", "channel", "chat", "channel_name"}) {
      if (rec.contains(key)) {
        channel = IdString(rec[key]);
        break;
      }
    }
    if (channel.empty() || !rec.contains("id")) {
      throw Error(ErrorCode::kParseError, "corpus",
                  fmt::format("{}: line {}: record needs 'id' and a channel "
                              "field",
                              path.string(), i + 1));
    }
    std::string text = FlattenText(rec.value("text", json()));
    if (IsBlank(text)) continue;
    Message msg;
    msg.channel_alias = ChannelAlias(channel, salt);
    msg.id = msg.channel_alias + "-" + IdString(rec["id"]);
    msg.timestamp = TimestampOf(rec);
    msg.text = Anonymize(text);
    out.push_back(std::move(msg));
  }
  return out;
}

}  // namespace

Corpus LoadExport(const fs::path& path, ExportFormat format,
                  std::string_view salt) {
  const std::string content = ReadFile(path);
  if (format == ExportFormat::kAuto) {
    format = path.extension() == ".jsonl" ? ExportFormat::kJsonl
                                          : ExportFormat::kTelegramExport;
  }
  std::vector<Message> messages = format == ExportFormat::kJsonl
                                      ? IngestJsonl(content, path, salt)
                                      : IngestTelegram(content, path, salt);
  if (messages.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "corpus",
                fmt::format("{}: no text messages", path.string()));
  }
  return Corpus(std::move(messages));
}

// ---------------------------------------------------------------------------
// Sampling

void CheckBatchPlan(const BatchPlan& plan) {
  if (plan.per_group == 0 || plan.groups.empty() ||
      plan.per_group * plan.groups.size() != plan.batch_size) {
    throw Error(ErrorCode::kInvalidArgument, "corpus",
                fmt::format("batch plan needs per_group x groups = batch_size "
                            "({} x {} != {})",
                            plan.per_group, plan.groups.size(),
                            plan.batch_size));
  }
  std::set<std::string> unique(plan.groups.begin(), plan.groups.end());
  if (unique.size() != plan.groups.size()) {
    throw Error(ErrorCode::kInvalidArgument, "corpus",
                "batch plan lists a group twice");
  }
}

std::vector<std::vector<Message>> SampleBatches(const Corpus& corpus,
                                                const BatchPlan& plan,
                                                std::size_t num_batches,
                                                std::uint64_t seed) {
  CheckBatchPlan(plan);
  std::vector<std::vector<Message>> batches(num_batches);
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    const std::string& group = plan.groups[g];
    std::vector<const Message*> pool;
    for (const Message& m : corpus.messages()) {
      if (m.channel_alias == group) pool.push_back(&m);
    }
    const std::size_t needed = plan.per_group * num_batches;
    if (pool.size() < needed) {
      throw Error(ErrorCode::kInsufficientGroup, "corpus",
                  fmt::format("group {} has {} messages, plan needs {}", group,
                              pool.size(), needed));
    }
    // Order-independent starting point, then a seeded shuffle per group.
    std::sort(pool.begin(), pool.end(),
              [](const Message* a, const Message* b) { return a->id < b->id; });
    std::mt19937_64 gen(DeriveSeed(seed, HashString(group)));
    SeededShuffle(std::span<const Message*>(pool), gen);
    for (std::size_t b = 0; b < num_batches; ++b) {
      for (std::size_t k = 0; k < plan.per_group; ++k) {
        batches[b].push_back(*pool[b * plan.per_group + k]);
      }
    }
  }
  return batches;
}

// ---------------------------------------------------------------------------
// JSONL stores

namespace {

template <typename Fn>
void ForEachRecord(const fs::path& path, Fn&& fn) {
  const std::string content = ReadFile(path);
  const std::vector<std::string> lines = SplitLines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (IsBlank(lines[i])) continue;
    const json rec = ParseJson(lines[i], path, i + 1);
    try {
      fn(rec, i + 1);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParseError &&
          e.code() != ErrorCode::kUnknownLabel) {
        throw;
      }
      throw Error(ErrorCode::kParseError, "corpus",
                  fmt::format("{}: line {}: {}", path.string(), i + 1,
                              e.what()));
    }
  }
}

template <typename Range, typename Fn>
std::string JoinJsonl(const Range& items, Fn&& to_json) {
  std::string out;
  for (const auto& item : items) {
    out += to_json(item).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace

Corpus ReadCorpus(const fs::path& path) {
  std::vector<Message> messages;
  ForEachRecord(path, [&](const json& rec, std::size_t line) {
    Message m = MessageFromJson(rec);
    if (!m.channel_alias.starts_with(kAliasPrefix)) {
      throw Error(ErrorCode::kInvalidRecord, "corpus",
                  fmt::format("{}: line {}: channel_alias '{}' is not an "
                              "anonymized alias",
                              path.string(), line, m.channel_alias));
    }
    messages.push_back(std::move(m));
  });
  return Corpus(std::move(messages));
}

void WriteCorpus(const fs::path& path, const Corpus& corpus) {
  AtomicWriteFile(path, JoinJsonl(corpus.messages(), [](const Message& m) {
                    return ToJson(m);
                  }));
}

std::vector<MessageAnnotation> ReadAnnotations(const fs::path& path,
                                               const Corpus* corpus) {
  std::vector<MessageAnnotation> out;
  ForEachRecord(path, [&](const json& rec, std::size_t line) {
    MessageAnnotation a = AnnotationFromJson(rec);
    if (corpus != nullptr) {
      const Message* m = corpus->Find(a.message_id);
      if (m == nullptr) {
        throw Error(ErrorCode::kInvalidRecord, "corpus",
                    fmt::format("{}: line {}: unknown message '{}'",
                                path.string(), line, a.message_id));
      }
      ValidationReport report = ValidateAnnotation(a, *m);
      if (!report.ok()) {
        throw Error(ErrorCode::kInvalidRecord, "corpus",
                    fmt::format("{}: line {}: {}", path.string(), line,
                                report.Summary()));
      }
    }
    out.push_back(std::move(a));
  });
  return out;
}

void WriteAnnotations(const fs::path& path,
                      const std::vector<MessageAnnotation>& annotations,
                      const Corpus& corpus) {
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const MessageAnnotation& a = annotations[i];
    const Message* m = corpus.Find(a.message_id);
    if (m == nullptr) {
      throw Error(ErrorCode::kInvalidRecord, "corpus",
                  fmt::format("record {}: unknown message '{}'", i + 1,
                              a.message_id));
    }
    ValidationReport report = ValidateAnnotation(a, *m);
    if (!report.ok()) {
      throw Error(ErrorCode::kInvalidRecord, "corpus",
                  fmt::format("record {}: {}", i + 1, report.Summary()));
    }
  }
  AtomicWriteFile(path, JoinJsonl(annotations, [](const MessageAnnotation& a) {
                    return ToJson(a);
                  }));
}

std::vector<ModelPrediction> ReadPredictions(const fs::path& path) {
  std::vector<ModelPrediction> out;
  ForEachRecord(path, [&](const json& rec, std::size_t) {
    out.push_back(PredictionFromJson(rec));
  });
  return out;
}

void WritePredictions(const fs::path& path,
                      const std::vector<ModelPrediction>& predictions) {
  AtomicWriteFile(path, JoinJsonl(predictions, [](const ModelPrediction& p) {
                    return ToJson(p);
                  }));
}

}  // namespace confra
