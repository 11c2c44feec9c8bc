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

#include "cli.h"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "confra/corpus.h"
#include "confra/error.h"
#include "confra/evaluation.h"
#include "confra/fileio.h"
#include "confra/framemap.h"
#include "confra/lexicon.h"
#include "confra/manifest.h"
#include "confra/model.h"
#include "confra/prompting.h"
#include "confra/service.h"
#include "json.hpp"
#include "toml.hpp"

namespace confra::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kModule = "cli";

[[noreturn]] void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, kModule, message);
}

// ---------------------------------------------------------------------------
// Global state shared by every verb

struct Globals {
  std::string config_path;
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  json config = json::object();
};

json LoadConfig(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    toml::table tbl = toml::parse_file(path);
    std::ostringstream ss;
    ss << toml::json_formatter{tbl};
    return json::parse(ss.str());
  } catch (const toml::parse_error& e) {
    std::ostringstream where;
    where << e.source().begin;
    Fail(ErrorCode::kConfigError,
         fmt::format("{}: {} ({})", path, e.description(), where.str()));
  }
}

// Fills option values from the config file when the flag was not given on
// the command line. Keys live under a per-verb table.
class Overlay {
 public:
  Overlay(const json& config, CLI::App* sub, std::string section)
      : config_(config), sub_(sub), section_(std::move(section)) {}

  template <typename T>
  void operator()(const std::string& flag, const std::string& key,
                  T& var) const {
    if (sub_->get_option(flag)->count() > 0) return;
    auto sec = config_.find(section_);
    if (sec == config_.end() || !sec->is_object()) return;
    auto it = sec->find(key);
    if (it == sec->end()) return;
    try {
      var = it->template get<T>();
    } catch (const json::exception& e) {
      Fail(ErrorCode::kConfigError,
           fmt::format("config {}.{}: {}", section_, key, e.what()));
    }
  }

 private:
  const json& config_;
  CLI::App* sub_;
  std::string section_;
};

fs::path OutPath(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

template <typename Range, typename Fn>
std::string Jsonl(const Range& items, Fn to_json) {
  std::string out;
  for (const auto& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  return out;
}

void WriteJson(const fs::path& path, const ordered_json& j) {
  AtomicWriteFile(path, j.dump(2) + "\n");
}

// Writes the manifest and prints a one-line JSON summary on stdout.
void Finish(const Globals& g, RunManifest& manifest,
            const std::vector<fs::path>& outputs, ordered_json summary) {
  for (const fs::path& p : outputs) manifest.AddOutput(p);
  const std::string verb = manifest.ToJson()["command"].get<std::string>();
  manifest.Write(OutPath(g, verb + ".manifest.json"));
  ordered_json line;
  line["command"] = verb;
  line["run_id"] = manifest.run_id();
  for (auto& [k, v] : summary.items()) line[k] = v;
  std::cout << line.dump() << std::endl;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string CsvLine(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += CsvField(fields[i]);
  }
  return out + "\n";
}

std::string Num(double v) { return fmt::format("{:.6f}", v); }

// ---------------------------------------------------------------------------
// ingest

struct IngestOpts {
  std::string input;
  std::string format = "auto";
};

void RunIngest(const Globals& g, CLI::App* sub, IngestOpts o) {
  Overlay ov(g.config, sub, "ingest");
  ov("--format", "format", o.format);
  const char* salt = std::getenv("CONFRA_SALT");
  if (salt == nullptr || *salt == '\0') {
    throw Error(ErrorCode::kConfigError, "corpus",
                "CONFRA_SALT is not set; channel aliasing needs a secret salt");
  }
  const ExportFormat format = ParseExportFormat(o.format);
  ordered_json cfg;
  cfg["format"] = o.format;
  // Lets two runs be compared without exposing the salt.
  cfg["salt_fingerprint"] = HmacSha256Hex(salt, "confra").substr(0, 16);
  RunManifest manifest("ingest", cfg);
  manifest.AddInput(o.input);

  Corpus corpus = LoadExport(o.input, format, salt);
  const fs::path corpus_path = OutPath(g, "corpus.jsonl");
  WriteCorpus(corpus_path, corpus);

  ordered_json stats;
  stats["run_digest"] = manifest.RunDigest();
  stats["messages"] = corpus.size();
  stats["counts_per_alias"] = corpus.manifest().counts_per_alias;
  stats["first_timestamp"] = corpus.manifest().first_timestamp;
  stats["last_timestamp"] = corpus.manifest().last_timestamp;
  const fs::path stats_path = OutPath(g, "corpus_stats.json");
  WriteJson(stats_path, stats);
  Finish(g, manifest, {corpus_path, stats_path},
         {{"messages", corpus.size()},
          {"channels", corpus.manifest().counts_per_alias.size()}});
}

// ---------------------------------------------------------------------------
// sample

struct SampleOpts {
  std::string corpus;
  std::size_t batch_size = 0;
  std::size_t per_group = 0;
  std::vector<std::string> groups;
  std::size_t num_batches = 1;
};

void RunSample(const Globals& g, CLI::App* sub, SampleOpts o) {
  Overlay ov(g.config, sub, "sample");
  ov("--batch-size", "batch_size", o.batch_size);
  ov("--per-group", "per_group", o.per_group);
  ov("--groups", "groups", o.groups);
  ov("--num-batches", "num_batches", o.num_batches);
  BatchPlan plan{o.batch_size, o.per_group, o.groups};
  CheckBatchPlan(plan);

  ordered_json cfg;
  cfg["batch_size"] = o.batch_size;
  cfg["per_group"] = o.per_group;
  cfg["groups"] = o.groups;
  cfg["num_batches"] = o.num_batches;
  cfg["seed"] = g.seed;
  RunManifest manifest("sample", cfg);
  manifest.AddInput(o.corpus);

  const Corpus corpus = ReadCorpus(o.corpus);
  const auto batches = SampleBatches(corpus, plan, o.num_batches, g.seed);
  ordered_json out;
  out["run_digest"] = manifest.RunDigest();
  out["seed"] = g.seed;
  out["batches"] = ordered_json::array();
  for (std::size_t i = 0; i < batches.size(); ++i) {
    ordered_json ids = ordered_json::array();
    for (const Message& m : batches[i]) ids.push_back(m.id);
    out["batches"].push_back({{"index", i}, {"message_ids", std::move(ids)}});
  }
  const fs::path path = OutPath(g, "batches.json");
  WriteJson(path, out);
  Finish(g, manifest, {path}, {{"batches", batches.size()}});
}

std::set<std::string> ReadBatchIds(const fs::path& path) {
  const json j = json::parse(ReadFile(path));
  std::set<std::string> ids;
  for (const json& b : j.at("batches")) {
    for (const json& id : b.at("message_ids")) ids.insert(id.get<std::string>());
  }
  return ids;
}

// ---------------------------------------------------------------------------
// map-frames

struct MapFramesOpts {
  std::string annotations;
  std::string corpus;
  std::string framenet_root;
  std::string data_dir;
  std::vector<std::string> labels = {"plan_event", "secret"};
  bool tail_filter = false;
  std::string power_law = "approx";
  double max_df = 1.0;  // 1.0 keeps every frame
  std::string span_source = "all";
  std::size_t top_k = 10;
  bool pretagged = false;
  std::string reference;
};

CoarsePos PretagPos(std::string tag) {
  for (char& c : tag) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (tag == "VERB" || tag == "V" || tag.rfind("VB", 0) == 0) return CoarsePos::kVerb;
  if (tag == "NOUN" || tag == "N" || tag.rfind("NN", 0) == 0) {
    return tag.rfind("NNP", 0) == 0 ? CoarsePos::kOther : CoarsePos::kNoun;
  }
  if (tag == "ADJ" || tag == "A" || tag.rfind("JJ", 0) == 0) return CoarsePos::kAdj;
  return CoarsePos::kOther;
}

using SpanKey = std::tuple<std::string, std::string, std::size_t, std::size_t>;

// Optional "tokens" arrays on annotation spans:
// [{"text": ..., "lemma": ..., "pos": ...}, ...].
std::map<SpanKey, std::vector<PretaggedToken>> ReadPretagged(
    const fs::path& path) {
  std::map<SpanKey, std::vector<PretaggedToken>> out;
  std::size_t line_no = 0;
  for (const std::string& line : SplitLines(ReadFile(path))) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json rec = json::parse(line);
    const std::string msg = rec.at("message_id").get<std::string>();
    for (const json& s : rec.value("spans", json::array())) {
      auto toks = s.find("tokens");
      if (toks == s.end() || !toks->is_array()) continue;
      std::vector<PretaggedToken> tokens;
      for (const json& t : *toks) {
        PretaggedToken pt;
        pt.surface = t.value("text", t.value("surface", std::string()));
        pt.lemma = t.value("lemma", pt.surface);
        pt.pos = PretagPos(t.value("pos", std::string()));
        tokens.push_back(std::move(pt));
      }
      out[{msg, s.at("label").get<std::string>(), s.at("start").get<std::size_t>(),
           s.at("end").get<std::size_t>()}] = std::move(tokens);
    }
    (void)line_no;
  }
  return out;
}

// Reference counts from an assignments JSONL ("frame_name" or "frame" per
// line) or a framedist-style object with "counts".
std::map<std::string, std::size_t> ReadReferenceCounts(const fs::path& path) {
  const std::string content = ReadFile(path);
  std::map<std::string, std::size_t> counts;
  try {
    const json j = json::parse(content);
    if (j.is_object() && j.contains("counts")) {
      for (auto& [k, v] : j.at("counts").items()) counts[k] = v.get<std::size_t>();
      return counts;
    }
  } catch (const json::parse_error&) {
    // not a single document; fall through to JSONL
  }
  for (const std::string& line : SplitLines(content)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json rec = json::parse(line);
    const std::string frame = rec.contains("frame_name")
                                  ? rec.at("frame_name").get<std::string>()
                                  : rec.at("frame").get<std::string>();
    ++counts[frame];
  }
  return counts;
}

void RunMapFrames(const Globals& g, CLI::App* sub, MapFramesOpts o) {
  Overlay ov(g.config, sub, "framemap");
  ov("--framenet-root", "framenet_root", o.framenet_root);
  ov("--data-dir", "data_dir", o.data_dir);
  ov("--labels", "labels", o.labels);
  ov("--tail-filter", "tail_filter", o.tail_filter);
  ov("--power-law", "power_law", o.power_law);
  ov("--max-df", "max_df", o.max_df);
  ov("--span-source", "span_source", o.span_source);
  ov("--top-k", "top_k", o.top_k);
  ov("--pretagged", "pretagged", o.pretagged);
  if (o.framenet_root.empty()) {
    if (const char* env = std::getenv("CONFRA_FRAMENET"); env && *env) {
      o.framenet_root = env;
    }
  }
  if (o.framenet_root.empty()) {
    throw Error(ErrorCode::kConfigError, "lexicon",
                "FrameNet root not given (--framenet-root or CONFRA_FRAMENET)");
  }
  if (o.span_source != "all" && o.span_source != "gold") {
    Fail(ErrorCode::kInvalidArgument, "--span-source must be all or gold");
  }
  if (o.power_law != "approx" && o.power_law != "exact") {
    Fail(ErrorCode::kInvalidArgument, "--power-law must be approx or exact");
  }
  if (!(o.max_df > 0.0 && o.max_df <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "--max-df must be in (0, 1]");
  }
  std::set<SpanLabel> labels;
  for (const std::string& l : o.labels) labels.insert(ParseLabel(l));
  const PowerLawMethod method = o.power_law == "exact"
                                    ? PowerLawMethod::kExactZeta
                                    : PowerLawMethod::kApproximate;

  ordered_json cfg;
  {
    std::vector<std::string> names;
    for (SpanLabel l : labels) names.emplace_back(LabelName(l));
    cfg["labels"] = names;
  }
  cfg["tail_filter"] = o.tail_filter;
  cfg["power_law"] = o.power_law;
  cfg["max_df"] = o.max_df;
  cfg["span_source"] = o.span_source;
  cfg["top_k"] = o.top_k;
  cfg["pretagged"] = o.pretagged;
  RunManifest manifest("map-frames", cfg);
  manifest.AddInput(o.annotations);
  manifest.AddInput(o.corpus);
  const fs::path lu_index = fs::path(o.framenet_root) / "luIndex.xml";
  if (fs::exists(lu_index)) manifest.AddInput(lu_index);
  if (!o.reference.empty()) manifest.AddInput(o.reference);

  const Corpus corpus = ReadCorpus(o.corpus);
  std::vector<MessageAnnotation> annotations =
      ReadAnnotations(o.annotations, &corpus);
  const FrameIndex index = LoadFrameNet(o.framenet_root);
  LexicalTools tools;
  if (!o.pretagged) {
    const fs::path dir = DataDir(o.data_dir);
    tools = LexicalTools::LoadDefault(dir);
    manifest.AddInput(dir / "lemmatizer-tables.json");
    manifest.AddInput(dir / "pos-lexicon.tsv");
  }
  const auto pretagged = o.pretagged
                             ? ReadPretagged(o.annotations)
                             : std::map<SpanKey, std::vector<PretaggedToken>>();
  if (o.span_source == "gold") annotations = AggregateGold(annotations);

  std::vector<FrameAssignment> assignments;
  std::vector<FrameAssignment> df_view;  // keyed per annotation record
  std::size_t total_spans = 0;
  std::size_t spans_without_tokens = 0;
  for (const MessageAnnotation& a : annotations) {
    const Message* msg = corpus.Find(a.message_id);
    for (std::size_t i = 0; i < a.spans.size(); ++i) {
      const Span& span = a.spans[i];
      if (!labels.count(span.label)) continue;
      ++total_spans;
      std::vector<FrameAssignment> found;
      if (o.pretagged) {
        auto it = pretagged.find({a.message_id, std::string(LabelName(span.label)),
                                  span.start, span.end});
        if (it == pretagged.end()) {
          ++spans_without_tokens;
          continue;
        }
        found = MapPretaggedSpan(span, i, a.message_id, it->second, index);
      } else {
        found = MapSpanToFrames(span, i, *msg, index, tools);
      }
      for (FrameAssignment& f : found) {
        FrameAssignment keyed = f;
        keyed.message_id = a.message_id + '\x1f' + a.annotator_id;
        df_view.push_back(std::move(keyed));
        assignments.push_back(std::move(f));
      }
    }
  }

  const FrameDistribution raw = BuildDistribution(assignments);
  const FrameDistribution after_df =
      o.max_df < 1.0 ? FilterGeneralFrames(raw, df_view, total_spans, o.max_df)
                     : raw;
  const std::optional<PowerLawFit> fit =
      TryFitDiscretePowerLaw(FrameCounts(after_df), method);
  const FrameDistribution final_dist =
      o.tail_filter ? FilterTail(after_df, fit) : after_df;

  std::vector<FrameAssignment> kept;
  for (const FrameAssignment& a : assignments) {
    if (final_dist.counts.count(a.frame_name)) kept.push_back(a);
  }
  auto multiword_stats = [](const std::vector<FrameAssignment>& as) {
    std::size_t n = 0;
    std::set<std::string> frames;
    for (const FrameAssignment& a : as) {
      if (!a.multiword) continue;
      ++n;
      frames.insert(a.frame_name);
    }
    return ordered_json{{"assignments", n}, {"frames", frames.size()}};
  };
  auto count_of = [](const FrameDistribution& d, const std::string& f) {
    auto it = d.counts.find(f);
    return it == d.counts.end() ? std::size_t{0} : it->second;
  };

  ordered_json dist = DistributionToJson(final_dist, fit);
  dist["unique"] = final_dist.unique();
  dist["unfiltered"] = DistributionToJson(raw, std::nullopt);
  dist["unfiltered"].erase("fit");
  dist["unfiltered"]["unique"] = raw.unique();
  dist["filters"] = {{"max_df", o.max_df},
                     {"after_max_df_unique", after_df.unique()},
                     {"after_max_df_total", after_df.total},
                     {"tail_filter", o.tail_filter},
                     {"power_law", o.power_law}};
  ordered_json watch;
  for (const char* f : {"Execute_plan", "Secrecy_status"}) {
    watch[f] = {{"pre_filter", count_of(raw, f)},
                {"post_filter", count_of(final_dist, f)}};
  }
  dist["watch_frames"] = watch;
  dist["multiword"] = {{"pre_filter", multiword_stats(assignments)},
                       {"post_filter", multiword_stats(kept)}};
  dist["spans"] = total_spans;
  if (o.pretagged) dist["spans_without_tokens"] = spans_without_tokens;
  if (!index.warnings().empty()) dist["lexicon_warnings"] = index.warnings();
  dist["run_digest"] = manifest.RunDigest();

  std::vector<fs::path> outputs;
  const fs::path assign_path = OutPath(g, "assignments.jsonl");
  AtomicWriteFile(assign_path, Jsonl(assignments, [](const FrameAssignment& a) {
                    return ToJson(a);
                  }));
  outputs.push_back(assign_path);

  if (!o.reference.empty()) {
    const auto ref = ReadReferenceCounts(o.reference);
    std::set<std::string> frames;
    for (const auto& [f, _] : ref) frames.insert(f);
    for (const auto& [f, _] : final_dist.counts) frames.insert(f);
    ordered_json diffs = ordered_json::array();
    std::size_t ref_total = 0;
    for (const auto& [_, c] : ref) ref_total += c;
    for (const std::string& f : frames) {
      const std::size_t ours = count_of(final_dist, f);
      auto it = ref.find(f);
      const std::size_t theirs = it == ref.end() ? 0 : it->second;
      if (ours == theirs) continue;
      diffs.push_back({{"frame", f},
                       {"ours", ours},
                       {"reference", theirs},
                       {"delta", static_cast<long long>(ours) -
                                     static_cast<long long>(theirs)}});
    }
    ordered_json report;
    report["run_digest"] = manifest.RunDigest();
    report["ours"] = {{"unique", final_dist.unique()}, {"total", final_dist.total}};
    report["reference"] = {{"unique", ref.size()}, {"total", ref_total}};
    report["frames"] = std::move(diffs);
    const fs::path diff_path = OutPath(g, "frame_diff.json");
    WriteJson(diff_path, report);
    outputs.push_back(diff_path);
    dist["reference_diff"] = {{"frames_differing", report["frames"].size()}};
  }

  const fs::path dist_path = OutPath(g, "framedist.json");
  WriteJson(dist_path, dist);
  outputs.push_back(dist_path);

  ordered_json top;
  top["run_digest"] = manifest.RunDigest();
  for (SpanLabel l : labels) {
    if (!IsCore(l)) continue;
    ordered_json ranks = ordered_json::array();
    for (const FrameRank& r : TopFramesPerLabel(kept, l, o.top_k)) {
      ranks.push_back(
          {{"frame", r.frame_name}, {"count", r.count}, {"lemmas", r.lemmas}});
    }
    top[std::string(LabelName(l))] = std::move(ranks);
  }
  const fs::path top_path = OutPath(g, "top_frames.json");
  WriteJson(top_path, top);
  outputs.push_back(top_path);

  Finish(g, manifest, outputs,
         {{"unique_frames", final_dist.unique()},
          {"occurrences", final_dist.total},
          {"unfiltered_unique", raw.unique()},
          {"unfiltered_occurrences", raw.total}});
}

// ---------------------------------------------------------------------------
// annotate

struct AnnotateOpts {
  std::string corpus;
  std::string strategy = "zero_shot";
  std::string model;
  std::string endpoint;
  std::string provider = "openai";
  std::size_t concurrency = 4;
  double temperature = 0.0;
  int max_tokens = 1024;
  long timeout_ms = 60000;
  std::size_t retries = 3;
  long backoff_ms = 500;
  std::string api_key_env = "CONFRA_API_KEY";
  std::string examples;
  std::string framenet_root;
  std::string data_dir;
  bool regenerate_hints = false;
  bool fuzzy_spans = false;
  double fuzzy_max_error = 0.1;
  std::string batches;
  std::size_t limit = 0;
};

void RunAnnotate(const Globals& g, CLI::App* sub, AnnotateOpts o) {
  Overlay ov(g.config, sub, "model");
  ov("--model", "model", o.model);
  ov("--endpoint", "endpoint", o.endpoint);
  ov("--provider", "provider", o.provider);
  ov("--concurrency", "concurrency", o.concurrency);
  ov("--temperature", "temperature", o.temperature);
  ov("--max-tokens", "max_tokens", o.max_tokens);
  ov("--timeout-ms", "timeout_ms", o.timeout_ms);
  ov("--retries", "retries", o.retries);
  ov("--backoff-ms", "backoff_ms", o.backoff_ms);
  ov("--api-key-env", "api_key_env", o.api_key_env);
  Overlay ova(g.config, sub, "annotate");
  ova("--strategy", "strategy", o.strategy);
  ova("--examples", "examples", o.examples);
  ova("--fuzzy-spans", "fuzzy_spans", o.fuzzy_spans);
  ova("--fuzzy-max-error", "fuzzy_max_error", o.fuzzy_max_error);
  if (o.framenet_root.empty()) {
    if (const char* env = std::getenv("CONFRA_FRAMENET"); env && *env) {
      o.framenet_root = env;
    }
  }

  ModelConfig mc;
  mc.endpoint = o.endpoint;
  mc.model = o.model;
  mc.provider = ParseProvider(o.provider);
  mc.temperature = o.temperature;
  mc.max_tokens = o.max_tokens;
  mc.timeout = std::chrono::milliseconds(o.timeout_ms);
  mc.max_concurrent = o.concurrency;
  mc.retry_budget = o.retries;
  mc.initial_backoff = std::chrono::milliseconds(o.backoff_ms);
  mc.api_key_env = o.api_key_env;
  mc.Check();
  const PromptStrategy strategy = ParseStrategy(o.strategy);

  ordered_json cfg;
  cfg["strategy"] = StrategyName(strategy);
  cfg["model"] = mc.model;
  cfg["provider"] = ProviderName(mc.provider);
  cfg["endpoint"] = mc.endpoint;
  cfg["temperature"] = mc.temperature;
  cfg["max_tokens"] = mc.max_tokens;
  cfg["retries"] = mc.retry_budget;
  cfg["fuzzy_spans"] = o.fuzzy_spans;
  cfg["fuzzy_max_error"] = o.fuzzy_max_error;
  cfg["regenerate_hints"] = o.regenerate_hints;
  cfg["limit"] = o.limit;
  RunManifest manifest("annotate", cfg);
  manifest.AddInput(o.corpus);
  if (!o.examples.empty()) manifest.AddInput(o.examples);
  if (!o.batches.empty()) manifest.AddInput(o.batches);

  std::vector<FewShotExample> examples =
      o.examples.empty() ? CanonicalExamples()
                         : ExamplesFromJson(json::parse(ReadFile(o.examples)));
  CheckExamples(examples);
  if (o.regenerate_hints) {
    if (o.framenet_root.empty()) {
      throw Error(ErrorCode::kConfigError, "lexicon",
                  "--regenerate-hints needs --framenet-root or CONFRA_FRAMENET");
    }
    const FrameIndex index = LoadFrameNet(o.framenet_root);
    const LexicalTools tools = LexicalTools::LoadDefault(DataDir(o.data_dir));
    for (FewShotExample& ex : examples) {
      if (!ex.frame_hints.empty()) ex.frame_hints = HintsForExample(ex, index, tools);
    }
  }

  const Corpus corpus = ReadCorpus(o.corpus);
  std::vector<Message> messages;
  const std::set<std::string> wanted =
      o.batches.empty() ? std::set<std::string>() : ReadBatchIds(o.batches);
  for (const Message& m : corpus.messages()) {
    if (!wanted.empty() && !wanted.count(m.id)) continue;
    messages.push_back(m);
    if (o.limit > 0 && messages.size() >= o.limit) break;
  }

  std::unique_ptr<ModelClient> client =
      mc.provider == Provider::kStub
          ? std::make_unique<StubModelClient>(mc.model, examples)
          : MakeModelClient(mc);
  const fs::path journal = OutPath(g, "raw_outputs.journal.jsonl");
  fs::remove(journal);
  ParseOptions popts;
  popts.fuzzy_spans = o.fuzzy_spans;
  popts.fuzzy_max_error_rate = o.fuzzy_max_error;
  const AnnotationRun run = AnnotateMessages(messages, strategy, examples,
                                             *client, o.concurrency, journal,
                                             popts);

  const fs::path raw_path = OutPath(g, "raw_outputs.jsonl");
  AtomicWriteFile(raw_path, Jsonl(run.raw_outputs, [](const RawModelOutput& r) {
                    return ToJson(r);
                  }));
  const fs::path pred_path = OutPath(g, "predictions.jsonl");
  WritePredictions(pred_path, run.predictions);
  const fs::path fail_path = OutPath(g, "failures.jsonl");
  AtomicWriteFile(fail_path, Jsonl(run.failures, [](const AnnotationFailure& f) {
                    return ordered_json{{"message_id", f.message_id},
                                        {"code", f.code},
                                        {"detail", f.detail}};
                  }));
  fs::remove(journal);
  Finish(g, manifest, {raw_path, pred_path, fail_path},
         {{"messages", messages.size()},
          {"predictions", run.predictions.size()},
          {"failures", run.failures.size()}});
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::vector<std::string> predictions;
  std::string annotations;
  std::string corpus;
};

ordered_json ScoresJson(const PrfScores& s) {
  return {{"precision", s.precision},
          {"recall", s.recall},
          {"f1", s.f1},
          {"tp", s.counts.tp},
          {"fp", s.counts.fp},
          {"fn", s.counts.fn},
          {"tn", s.counts.tn}};
}

ordered_json KappaJson(const KappaSummary& k) {
  ordered_json pairs = ordered_json::array();
  for (const PairKappa& p : k.pairs) {
    pairs.push_back({{"a", p.annotator_a}, {"b", p.annotator_b}, {"kappa", p.kappa}});
  }
  return {{"mean", k.mean},
          {"sd", k.sd},
          {"n_pairs", k.pairs.size()},
          {"skipped_pairs", k.skipped_pairs},
          {"pairs", std::move(pairs)}};
}

template <typename Fn>
ordered_json KappaOrReason(Fn fn) {
  try {
    return KappaJson(fn());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kKappaUndefined && e.code() != ErrorCode::kNoOverlap) {
      throw;
    }
    return {{"undefined", e.qualified_code()}, {"detail", e.what()}};
  }
}

ordered_json Percentages(std::size_t conspiratorial, std::size_t supports_only,
                         std::size_t non, std::size_t n) {
  auto pct = [n](std::size_t c) {
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(c) / static_cast<double>(n);
  };
  return {{"n", n},
          {"conspiratorial", conspiratorial},
          {"supports_ct_only", supports_only},
          {"non_conspiratorial", non},
          {"conspiratorial_pct", pct(conspiratorial)},
          {"supports_ct_only_pct", pct(supports_only)},
          {"non_conspiratorial_pct", pct(non)}};
}

// Counts per annotation record; "supports_ct_only" marks records that are not
// conspiratorial but flag support for one.
ordered_json LabelDistribution(std::span<const MessageAnnotation> records) {
  std::size_t c = 0, s = 0, n = 0;
  for (const MessageAnnotation& a : records) {
    if (a.is_conspiratorial) {
      ++c;
    } else if (a.supports_ct.value_or(false)) {
      ++s;
    } else {
      ++n;
    }
  }
  return Percentages(c, s, n, records.size());
}

void RunEvaluate(const Globals& g, CLI::App*, EvaluateOpts o) {
  ordered_json cfg;
  cfg["span_modes"] = {"token_overlap", "exact"};
  cfg["gold"] = "majority_vote_ties_positive";
  RunManifest manifest("evaluate", cfg);
  manifest.AddInput(o.annotations);
  manifest.AddInput(o.corpus);
  for (const std::string& p : o.predictions) manifest.AddInput(p);

  const Corpus corpus = ReadCorpus(o.corpus);
  const std::vector<MessageAnnotation> annotations =
      ReadAnnotations(o.annotations, &corpus);
  const std::vector<MessageAnnotation> gold = AggregateGold(annotations);
  std::map<std::string, const MessageAnnotation*> gold_by_id;
  for (const MessageAnnotation& a : gold) gold_by_id[a.message_id] = &a;

  // Group predictions by player, preserving file order of first appearance.
  std::vector<std::string> players;
  std::map<std::string, std::vector<ModelPrediction>> by_player;
  for (const std::string& path : o.predictions) {
    for (ModelPrediction& p : ReadPredictions(path)) {
      const std::string id = PlayerId(p);
      if (!by_player.count(id)) players.push_back(id);
      by_player[id].push_back(std::move(p));
    }
  }

  ordered_json results = ordered_json::array();
  std::vector<MetricRow> rows;
  for (const std::string& player : players) {
    const std::vector<ModelPrediction>& preds = by_player[player];
    const std::string model = preds.front().model_id;
    const std::string strategy(StrategyName(preds.front().strategy));
    // Messages without a prediction count as negative with no spans;
    // predictions for unannotated messages are not scored.
    std::map<std::string, ModelPrediction> scored;
    std::size_t unscored = 0;
    for (const ModelPrediction& p : preds) {
      if (!gold_by_id.count(p.message_id)) {
        ++unscored;
        continue;
      }
      if (!scored.emplace(p.message_id, p).second) {
        Fail(ErrorCode::kInvalidRecord,
             fmt::format("duplicate prediction for '{}' by {}", p.message_id, player));
      }
    }
    std::size_t missing = 0;
    std::vector<ModelPrediction> aligned;
    for (const MessageAnnotation& a : gold) {
      auto it = scored.find(a.message_id);
      if (it != scored.end()) {
        aligned.push_back(it->second);
        continue;
      }
      ++missing;
      ModelPrediction filler;
      filler.message_id = a.message_id;
      filler.model_id = model;
      filler.strategy = preds.front().strategy;
      filler.flags.push_back("MISSING_PREDICTION");
      aligned.push_back(std::move(filler));
    }

    const PrfScores cls = ClassificationMetrics(aligned, gold);
    ordered_json entry;
    entry["model"] = model;
    entry["strategy"] = strategy;
    entry["classification"] = ScoresJson(cls);
    for (auto [name, v] : {std::pair{"precision", cls.precision},
                           std::pair{"recall", cls.recall},
                           std::pair{"f1", cls.f1}}) {
      rows.push_back({model, strategy, "is_conspiratorial", name, v});
    }
    ordered_json spans;
    for (SpanLabel label : kAllLabels) {
      ordered_json per_mode;
      for (SpanMatchMode mode : {SpanMatchMode::kTokenOverlap, SpanMatchMode::kExact}) {
        const PrfScores s = SpanMetrics(aligned, gold, corpus, label, mode);
        const std::string mode_name(SpanMatchModeName(mode));
        per_mode[mode_name] = ScoresJson(s);
        for (auto [name, v] : {std::pair{"precision", s.precision},
                               std::pair{"recall", s.recall},
                               std::pair{"f1", s.f1}}) {
          rows.push_back({model, strategy, std::string(LabelName(label)),
                          mode_name + "_" + name, v});
        }
      }
      spans[std::string(LabelName(label))] = std::move(per_mode);
    }
    entry["spans"] = std::move(spans);
    entry["missing_predictions"] = missing;
    entry["unscored_predictions"] = unscored;
    results.push_back(std::move(entry));
  }

  ordered_json agreement;
  agreement["classification"] =
      KappaOrReason([&] { return ClassificationAgreement(annotations); });
  agreement["span_unit"] = "token";
  ordered_json span_kappa;
  for (SpanLabel label : kAllLabels) {
    span_kappa[std::string(LabelName(label))] =
        KappaOrReason([&] { return SpanAgreement(annotations, label, corpus); });
  }
  agreement["spans"] = std::move(span_kappa);

  ordered_json out;
  out["run_digest"] = manifest.RunDigest();
  out["gold_messages"] = gold.size();
  out["label_distribution"] = {{"per_annotation", LabelDistribution(annotations)},
                               {"per_message", LabelDistribution(gold)}};
  out["agreement"] = std::move(agreement);
  out["results"] = std::move(results);

  const fs::path json_path = OutPath(g, "metrics.json");
  WriteJson(json_path, out);
  const fs::path csv_path = OutPath(g, "metrics.csv");
  AtomicWriteFile(csv_path, MetricsCsv(rows));
  Finish(g, manifest, {json_path, csv_path},
         {{"players", players.size()}, {"gold_messages", gold.size()}});
}

// ---------------------------------------------------------------------------
// elo

struct EloOpts {
  std::string votes;
  std::string candidates;
  std::string judgments;
  std::string predictions_a;
  std::string predictions_b;
  std::string games;
  std::string player_a;
  std::string player_b;
  bool games_per_vote = false;
  std::size_t repetitions = 1000;
  double k = kDefaultK;
  std::size_t threads = 0;
};

void RunElo(const Globals& g, CLI::App* sub, EloOpts o) {
  Overlay ov(g.config, sub, "elo");
  ov("--repetitions", "repetitions", o.repetitions);
  ov("--K", "K", o.k);
  ov("--games-per-vote", "games_per_vote", o.games_per_vote);
  ov("--threads", "threads", o.threads);
  const int modes = !o.votes.empty() + !o.judgments.empty() + !o.games.empty();
  if (modes != 1) {
    Fail(ErrorCode::kInvalidArgument,
         "give exactly one of --votes, --judgments or --games");
  }

  ordered_json cfg;
  cfg["repetitions"] = o.repetitions;
  cfg["K"] = o.k;
  cfg["seed"] = g.seed;
  std::vector<GameRecord> games;
  std::optional<std::map<std::string, double>> bws;

  RunManifest* manifest_ptr = nullptr;
  std::unique_ptr<RunManifest> manifest;
  auto start = [&](const char* mode) {
    cfg["mode"] = mode;
    cfg["player_a"] = o.player_a;
    cfg["player_b"] = o.player_b;
    manifest = std::make_unique<RunManifest>("elo", cfg);
    manifest_ptr = manifest.get();
  };

  if (!o.votes.empty()) {
    if (o.candidates.empty()) {
      Fail(ErrorCode::kInvalidArgument, "--votes needs --candidates");
    }
    const auto mapping = ReadCandidateMapping(o.candidates);
    if (o.player_a.empty() || o.player_b.empty()) {
      std::set<std::string> players;
      for (const auto& [_, p] : mapping) players.insert(p);
      if (players.size() != 2) {
        Fail(ErrorCode::kInvalidArgument,
             fmt::format("mapping has {} players; name two with --player-a "
                         "and --player-b",
                         players.size()));
      }
      o.player_a = *players.begin();
      o.player_b = *players.rbegin();
    }
    cfg["rule"] = o.games_per_vote ? "per_vote" : "majority";
    start("votes");
    manifest_ptr->AddInput(o.votes);
    manifest_ptr->AddInput(o.candidates);
    const std::vector<VoteRecord> votes = ReadVotes(o.votes);
    games = VotesToGames(votes, mapping, o.player_a, o.player_b,
                         o.games_per_vote ? GameRule::kPerVote : GameRule::kMajority);
    bws = BestWorstByPlayer(votes, mapping);
  } else if (!o.judgments.empty()) {
    if (o.predictions_a.empty() || o.predictions_b.empty()) {
      Fail(ErrorCode::kInvalidArgument,
           "--judgments needs --predictions-a and --predictions-b");
    }
    const auto preds_a = ReadPredictions(o.predictions_a);
    const auto preds_b = ReadPredictions(o.predictions_b);
    if (o.player_a.empty() && !preds_a.empty()) o.player_a = PlayerId(preds_a.front());
    if (o.player_b.empty() && !preds_b.empty()) o.player_b = PlayerId(preds_b.front());
    if (o.player_a.empty() || o.player_b.empty() || o.player_a == o.player_b) {
      Fail(ErrorCode::kInvalidArgument,
           "players must be two distinct names (--player-a / --player-b)");
    }
    start("judgments");
    manifest_ptr->AddInput(o.judgments);
    manifest_ptr->AddInput(o.predictions_a);
    manifest_ptr->AddInput(o.predictions_b);
    games = JudgmentsToGames(ReadJudgments(o.judgments), preds_a, preds_b,
                             o.player_a, o.player_b);
  } else {
    start("games");
    manifest_ptr->AddInput(o.games);
    std::size_t line_no = 0;
    for (const std::string& line : SplitLines(ReadFile(o.games))) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        games.push_back(GameFromJson(json::parse(line)));
      } catch (const json::exception& e) {
        Fail(ErrorCode::kParseError,
             fmt::format("{}: line {}: {}", o.games, line_no, e.what()));
      }
    }
  }

  const TournamentResult result =
      RepeatedTournament(games, o.repetitions, g.seed, o.k, o.threads);
  ordered_json out = ToJson(result);
  std::set<std::string> names;
  for (const GameRecord& gr : games) {
    names.insert(gr.player_a);
    names.insert(gr.player_b);
  }
  out["players"] = names;
  out["games"] = games.size();
  if (bws) out["best_worst_scores"] = *bws;
  out["run_digest"] = manifest_ptr->RunDigest();

  const fs::path games_path = OutPath(g, "games.jsonl");
  AtomicWriteFile(games_path,
                  Jsonl(games, [](const GameRecord& gr) { return ToJson(gr); }));
  const fs::path result_path = OutPath(g, "eloresult.json");
  WriteJson(result_path, out);
  Finish(g, *manifest_ptr, {games_path, result_path},
         {{"games", games.size()},
          {"win_counts", result.win_counts},
          {"tie_count", result.tie_count}});
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  std::string metrics;
  std::vector<std::string> elo;  // [name=]path
  std::string framedist;
};

void RunReport(const Globals& g, CLI::App*, ReportOpts o) {
  if (o.metrics.empty() && o.elo.empty() && o.framedist.empty()) {
    Fail(ErrorCode::kInvalidArgument,
         "nothing to report; give --metrics, --elo or --framedist");
  }
  std::vector<std::pair<std::string, std::string>> elo_inputs;
  for (const std::string& spec : o.elo) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      elo_inputs.emplace_back(fs::path(spec).parent_path().filename().string(), spec);
    } else {
      elo_inputs.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
    }
  }
  ordered_json cfg;
  {
    std::vector<std::string> names;
    for (const auto& [n, _] : elo_inputs) names.push_back(n);
    cfg["elo_names"] = names;
  }
  RunManifest manifest("report", cfg);
  if (!o.metrics.empty()) manifest.AddInput(o.metrics);
  for (const auto& [_, p] : elo_inputs) manifest.AddInput(p);
  if (!o.framedist.empty()) manifest.AddInput(o.framedist);

  ordered_json report;
  report["run_digest"] = manifest.RunDigest();
  std::vector<fs::path> outputs;

  if (!o.metrics.empty()) {
    const json m = json::parse(ReadFile(o.metrics));
    ordered_json cls = ordered_json::array();
    ordered_json spans = ordered_json::array();
    std::string cls_csv = CsvLine({"model", "strategy", "precision", "recall", "f1"});
    std::string span_csv =
        CsvLine({"model", "strategy", "label", "mode", "precision", "recall", "f1"});
    for (const json& r : m.at("results")) {
      const std::string model = r.at("model");
      const std::string strategy = r.at("strategy");
      const json& c = r.at("classification");
      cls.push_back({{"model", model},
                     {"strategy", strategy},
                     {"precision", c.at("precision")},
                     {"recall", c.at("recall")},
                     {"f1", c.at("f1")}});
      cls_csv += CsvLine({model, strategy, Num(c.at("precision")),
                          Num(c.at("recall")), Num(c.at("f1"))});
      for (auto& [label, modes] : r.at("spans").items()) {
        for (auto& [mode, s] : modes.items()) {
          spans.push_back({{"model", model},
                           {"strategy", strategy},
                           {"label", label},
                           {"mode", mode},
                           {"precision", s.at("precision")},
                           {"recall", s.at("recall")},
                           {"f1", s.at("f1")}});
          span_csv += CsvLine({model, strategy, label, mode, Num(s.at("precision")),
                               Num(s.at("recall")), Num(s.at("f1"))});
        }
      }
    }
    report["classification"] = std::move(cls);
    report["spans"] = std::move(spans);
    if (m.contains("agreement")) report["agreement"] = m.at("agreement");
    if (m.contains("label_distribution")) {
      report["label_distribution"] = m.at("label_distribution");
    }
    const fs::path cls_path = OutPath(g, "classification.csv");
    AtomicWriteFile(cls_path, cls_csv);
    const fs::path span_path = OutPath(g, "spans.csv");
    AtomicWriteFile(span_path, span_csv);
    outputs.push_back(cls_path);
    outputs.push_back(span_path);
  }

  if (!elo_inputs.empty()) {
    ordered_json elo = ordered_json::array();
    std::string csv =
        CsvLine({"comparison", "player", "win_count", "tie_count", "repetitions"});
    for (const auto& [name, path] : elo_inputs) {
      const json r = json::parse(ReadFile(path));
      elo.push_back({{"comparison", name},
                     {"win_counts", r.at("win_counts")},
                     {"tie_count", r.at("tie_count")},
                     {"repetitions", r.at("repetitions")},
                     {"K", r.at("K")}});
      for (auto& [player, wins] : r.at("win_counts").items()) {
        csv += CsvLine({name, player, std::to_string(wins.get<std::size_t>()),
                        std::to_string(r.at("tie_count").get<std::size_t>()),
                        std::to_string(r.at("repetitions").get<std::size_t>())});
      }
    }
    report["elo"] = std::move(elo);
    const fs::path elo_path = OutPath(g, "elo.csv");
    AtomicWriteFile(elo_path, csv);
    outputs.push_back(elo_path);
  }

  if (!o.framedist.empty()) {
    const json d = json::parse(ReadFile(o.framedist));
    ordered_json frames;
    frames["unique"] = d.at("counts").size();
    frames["total"] = d.at("total");
    frames["fit"] = d.at("fit");
    if (d.contains("watch_frames")) frames["watch_frames"] = d.at("watch_frames");
    report["frames"] = std::move(frames);
  }

  const fs::path report_path = OutPath(g, "report.json");
  WriteJson(report_path, report);
  outputs.insert(outputs.begin(), report_path);
  Finish(g, manifest, outputs, {{"outputs", outputs.size()}});
}

// ---------------------------------------------------------------------------
// prepare-tasks

struct PrepareOpts {
  std::string corpus;
  std::vector<std::string> predictions;
  std::string kind = "best_worst_spans";
};

void RunPrepare(const Globals& g, CLI::App*, PrepareOpts o) {
  const TaskKind kind = ParseTaskKind(o.kind);
  ordered_json cfg;
  cfg["kind"] = TaskKindName(kind);
  cfg["seed"] = g.seed;
  RunManifest manifest("prepare-tasks", cfg);
  manifest.AddInput(o.corpus);
  for (const std::string& p : o.predictions) manifest.AddInput(p);

  const Corpus corpus = ReadCorpus(o.corpus);
  std::vector<ModelPrediction> preds;
  for (const std::string& p : o.predictions) {
    for (ModelPrediction& pr : ReadPredictions(p)) preds.push_back(std::move(pr));
  }
  const PreparedTasks prepared = PrepareTasks(corpus, preds, kind, g.seed);
  const fs::path tasks_path = OutPath(g, "tasks.jsonl");
  const fs::path mapping_path = OutPath(g, "candidates.json");
  WriteTasks(tasks_path, mapping_path, prepared);
  Finish(g, manifest, {tasks_path, mapping_path},
         {{"tasks", prepared.tasks.size()}});
}

// ---------------------------------------------------------------------------
// serve

struct ServeOpts {
  std::string tasks;
  std::string votes;
  std::string judgments;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::string coverage = "full";
  std::size_t per_item = 0;
  std::string static_dir;
  bool blind_labels = false;
};

void RunServe(const Globals& g, CLI::App* sub, ServeOpts o) {
  Overlay ov(g.config, sub, "serve");
  ov("--host", "host", o.host);
  ov("--port", "port", o.port);
  ov("--coverage", "coverage", o.coverage);
  ov("--per-item", "per_item", o.per_item);
  ov("--static-dir", "static_dir", o.static_dir);
  ov("--blind-labels", "blind_labels", o.blind_labels);
  if (o.token.empty()) {
    if (const char* env = std::getenv("CONFRA_TOKEN"); env && *env) o.token = env;
  }

  ServiceOptions so;
  so.votes_path = o.votes.empty() ? OutPath(g, "votes.jsonl") : fs::path(o.votes);
  so.judgments_path =
      o.judgments.empty() ? OutPath(g, "judgments.jsonl") : fs::path(o.judgments);
  so.seed = g.seed;
  so.token = o.token;
  so.coverage = ParseCoverage(o.coverage);
  so.per_item = o.per_item;
  so.static_dir = o.static_dir;
  so.blind_labels = o.blind_labels;

  ordered_json cfg;
  cfg["coverage"] = o.coverage;
  cfg["per_item"] = o.per_item;
  cfg["blind_labels"] = o.blind_labels;
  cfg["seed"] = g.seed;
  RunManifest manifest("serve", cfg);
  manifest.AddInput(o.tasks);

  ReviewService service(ReadTasks(o.tasks), so);
  ReviewHttpServer server(service);

  // Signals are taken synchronously by a watcher thread.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const int port = server.Bind(o.host, o.port);
  std::cerr << fmt::format("serving on http://{}:{}/\n", o.host, port);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    const timespec tick{0, 200'000'000};
    while (!done.load()) {
      if (sigtimedwait(&set, nullptr, &tick) > 0) {
        server.Stop();
        return;
      }
    }
  });
  server.Listen();
  done = true;
  watcher.join();
  pthread_sigmask(SIG_UNBLOCK, &set, nullptr);

  std::vector<fs::path> outputs;
  for (const fs::path& p : {so.votes_path, so.judgments_path}) {
    if (fs::exists(p)) outputs.push_back(p);
  }
  Finish(g, manifest, outputs, json::parse(service.Progress().body));
}

// ---------------------------------------------------------------------------

void PrintError(const std::string& code, const std::string& message) {
  const ordered_json err = {{"error", {{"code", code}, {"message", message}}}};
  std::cerr << err.dump() << std::endl;
}

}  // namespace

int Run(const std::vector<std::string>& args) {
  CLI::App app{"Conspiracy frame toolkit", "confra"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(ToolVersion()));
  Globals g;
  app.add_option("--config", g.config_path, "TOML configuration file")
      ->check(CLI::ExistingFile);
  CLI::Option* seed_opt = app.add_option("--seed", g.seed, "Random seed");
  CLI::Option* out_opt = app.add_option("--out-dir", g.out_dir, "Output directory");

  IngestOpts ingest;
  CLI::App* c_ingest = app.add_subcommand("ingest", "Load and anonymize a channel export");
  c_ingest->add_option("--input", ingest.input)->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--format", ingest.format, "telegram-export | jsonl | auto");

  SampleOpts sample;
  CLI::App* c_sample = app.add_subcommand("sample", "Draw stratified annotation batches");
  c_sample->add_option("--corpus", sample.corpus)->required()->check(CLI::ExistingFile);
  c_sample->add_option("--batch-size", sample.batch_size);
  c_sample->add_option("--per-group", sample.per_group);
  c_sample->add_option("--groups", sample.groups, "Channel aliases")->delimiter(',');
  c_sample->add_option("--num-batches", sample.num_batches);

  MapFramesOpts mf;
  CLI::App* c_map = app.add_subcommand("map-frames", "Map annotated spans to FrameNet frames");
  c_map->add_option("--annotations", mf.annotations)->required()->check(CLI::ExistingFile);
  c_map->add_option("--corpus", mf.corpus)->required()->check(CLI::ExistingFile);
  c_map->add_option("--framenet-root", mf.framenet_root, "FrameNet 1.7 directory");
  c_map->add_option("--data-dir", mf.data_dir, "Lemmatizer and POS tables");
  c_map->add_option("--labels", mf.labels)->delimiter(',');
  c_map->add_flag("--tail-filter", mf.tail_filter, "Drop frames below the fitted xmin");
  c_map->add_option("--power-law", mf.power_law, "approx | exact");
  c_map->add_option("--max-df", mf.max_df, "Drop frames in more than this fraction of spans");
  c_map->add_option("--span-source", mf.span_source, "all | gold");
  c_map->add_option("--top-k", mf.top_k);
  c_map->add_flag("--pretagged", mf.pretagged, "Use token lemma/POS columns from the annotations");
  c_map->add_option("--reference-assignments", mf.reference)->check(CLI::ExistingFile);

  AnnotateOpts an;
  CLI::App* c_ann = app.add_subcommand("annotate", "Run an LLM over the corpus");
  c_ann->add_option("--corpus", an.corpus)->required()->check(CLI::ExistingFile);
  c_ann->add_option("--strategy", an.strategy, "zero_shot | few_shot | frame_guided");
  c_ann->add_option("--model", an.model);
  c_ann->add_option("--endpoint", an.endpoint);
  c_ann->add_option("--provider", an.provider, "openai | ollama | stub");
  c_ann->add_option("--concurrency", an.concurrency);
  c_ann->add_option("--temperature", an.temperature);
  c_ann->add_option("--max-tokens", an.max_tokens);
  c_ann->add_option("--timeout-ms", an.timeout_ms);
  c_ann->add_option("--retries", an.retries);
  c_ann->add_option("--backoff-ms", an.backoff_ms);
  c_ann->add_option("--api-key-env", an.api_key_env);
  c_ann->add_option("--examples", an.examples, "Few-shot examples JSON")
      ->check(CLI::ExistingFile);
  c_ann->add_option("--framenet-root", an.framenet_root);
  c_ann->add_option("--data-dir", an.data_dir);
  c_ann->add_flag("--regenerate-hints", an.regenerate_hints);
  c_ann->add_flag("--fuzzy-spans", an.fuzzy_spans);
  c_ann->add_option("--fuzzy-max-error", an.fuzzy_max_error);
  c_ann->add_option("--batches", an.batches, "batches.json from sample")
      ->check(CLI::ExistingFile);
  c_ann->add_option("--limit", an.limit);

  EvaluateOpts ev;
  CLI::App* c_eval = app.add_subcommand("evaluate", "Score predictions against annotations");
  c_eval->add_option("--predictions", ev.predictions)->check(CLI::ExistingFile);
  c_eval->add_option("--annotations", ev.annotations)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--corpus", ev.corpus)->required()->check(CLI::ExistingFile);

  EloOpts elo;
  CLI::App* c_elo = app.add_subcommand("elo", "Repeated ELO tournament");
  c_elo->add_option("--votes", elo.votes)->check(CLI::ExistingFile);
  c_elo->add_option("--candidates", elo.candidates)->check(CLI::ExistingFile);
  c_elo->add_option("--judgments", elo.judgments)->check(CLI::ExistingFile);
  c_elo->add_option("--predictions-a", elo.predictions_a)->check(CLI::ExistingFile);
  c_elo->add_option("--predictions-b", elo.predictions_b)->check(CLI::ExistingFile);
  c_elo->add_option("--games", elo.games)->check(CLI::ExistingFile);
  c_elo->add_option("--player-a", elo.player_a);
  c_elo->add_option("--player-b", elo.player_b);
  c_elo->add_flag("--games-per-vote", elo.games_per_vote);
  c_elo->add_option("--repetitions", elo.repetitions);
  c_elo->add_option("--K", elo.k, "K-factor");
  c_elo->add_option("--threads", elo.threads);

  ReportOpts rep;
  CLI::App* c_rep = app.add_subcommand("report", "Collect figure tables");
  c_rep->add_option("--metrics", rep.metrics)->check(CLI::ExistingFile);
  c_rep->add_option("--elo", rep.elo, "[name=]eloresult.json");
  c_rep->add_option("--framedist", rep.framedist)->check(CLI::ExistingFile);

  PrepareOpts prep;
  CLI::App* c_prep = app.add_subcommand("prepare-tasks", "Build blinded review tasks");
  c_prep->add_option("--corpus", prep.corpus)->required()->check(CLI::ExistingFile);
  c_prep->add_option("--predictions", prep.predictions)->required()->check(CLI::ExistingFile);
  c_prep->add_option("--kind", prep.kind, "best_worst_spans | binary_ct_judgment");

  ServeOpts sv;
  CLI::App* c_serve = app.add_subcommand("serve", "Serve review tasks and collect votes");
  c_serve->add_option("--tasks", sv.tasks)->required()->check(CLI::ExistingFile);
  c_serve->add_option("--votes", sv.votes);
  c_serve->add_option("--judgments", sv.judgments);
  c_serve->add_option("--host", sv.host);
  c_serve->add_option("--port", sv.port);
  c_serve->add_option("--token", sv.token);
  c_serve->add_option("--coverage", sv.coverage, "full | balanced");
  c_serve->add_option("--per-item", sv.per_item);
  c_serve->add_option("--static-dir", sv.static_dir)->check(CLI::ExistingDirectory);
  c_serve->add_flag("--blind-labels", sv.blind_labels);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    g.config = LoadConfig(g.config_path);
    if (seed_opt->count() == 0 && g.config.contains("seed")) {
      g.seed = g.config.at("seed").get<std::uint64_t>();
    }
    if (out_opt->count() == 0 && g.config.contains("out_dir")) {
      g.out_dir = g.config.at("out_dir").get<std::string>();
    }
    if (c_ingest->parsed()) RunIngest(g, c_ingest, ingest);
    if (c_sample->parsed()) RunSample(g, c_sample, sample);
    if (c_map->parsed()) RunMapFrames(g, c_map, mf);
    if (c_ann->parsed()) RunAnnotate(g, c_ann, an);
    if (c_eval->parsed()) RunEvaluate(g, c_eval, ev);
    if (c_elo->parsed()) RunElo(g, c_elo, elo);
    if (c_rep->parsed()) RunReport(g, c_rep, rep);
    if (c_prep->parsed()) RunPrepare(g, c_prep, prep);
    if (c_serve->parsed()) RunServe(g, c_serve, sv);
  } catch (const Error& e) {
    PrintError(e.qualified_code(), e.what());
    return kExitError;
  } catch (const json::exception& e) {
    PrintError("cli.PARSE_ERROR", e.what());
    return kExitError;
  } catch (const fs::filesystem_error& e) {
    PrintError("cli.IO_ERROR", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    PrintError("cli.INTERNAL", e.what());
    return kExitError;
  }
  return kExitOk;
}

}  // namespace confra::cli
