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


// Acceptance runner. Prints one PASS/FAIL/SKIP line per criterion.
//
//   confra_acceptance --desk [--expect-fail ID]...
//   confra_acceptance --data [--data-dir DIR]
//
// --desk needs nothing beyond the test fixtures. --data reads the released
// dataset from --data-dir or $CONFRA_DATA and exits 77 when it is absent.
// An --expect-fail criterion may FAIL without failing the run; if it
// passes the run fails so the list gets pruned.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <fmt/format.h>
#include <fmt/ranges.h>
#include "json.hpp"

#include "cli_harness.h"
#include "confra/corpus.h"
#include "confra/error.h"
#include "confra/evaluation.h"
#include "confra/fileio.h"
#include "confra/framemap.h"
#include "confra/model.h"
#include "confra/prompting.h"
#include "confra/text.h"
#include "oracles.h"
#include "test_util.h"

namespace confra {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing_util::DataPath;
using testing_util::GoldenPath;
using testing_util::RunCli;
using testing_util::TempDir;

// Tolerances.
constexpr double kEloConservationPerGame = 1e-9;
constexpr double kAlphaTol = 0.1;
constexpr double kXminTol = 1.0;
constexpr double kMetricTol = 1e-12;
constexpr double kLabelPctTol = 0.01;
constexpr double kKappaTol = 0.01;
constexpr double kSpanKappaTol = 0.02;
constexpr double kFrameRelTol = 0.10;
constexpr double kEloWinTol = 60.0;

// Pinned before the first run.
constexpr std::uint64_t kPowerLawSeed = 42;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

struct Report {
  std::set<std::string> expect_fail;
  bool failed = false;

  void Line(const std::string& id, const Outcome& o) {
    std::string tag = o.status == Status::kPass   ? "PASS"
                      : o.status == Status::kFail ? "FAIL"
                                                  : "SKIP";
    const bool expected = expect_fail.count(id) > 0;
    if (o.status == Status::kFail && !expected) failed = true;
    if (o.status == Status::kPass && expected) {
      failed = true;
      tag = "PASS (XPASS: drop --expect-fail)";
    }
    if (o.status == Status::kFail && expected) tag = "FAIL (expected)";
    std::cout << fmt::format("{} {}: {}", tag, id, o.detail) << std::endl;
  }
};

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs `fn`, turning an escaping exception into a FAIL.
Outcome Guard(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {Status::kFail, fmt::format("exception: {}", e.what())};
  }
}

bool Near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------------------
// Desk criteria

GameRecord Game(std::string a, std::string b, confra::Outcome o, int i) {
  return {"g" + std::to_string(i), std::move(a), std::move(b), o};
}

Outcome EloProperties() {
  std::mt19937_64 gen(2024);
  const std::vector<std::string> names = {"p0", "p1", "p2", "p3", "p4"};
  const confra::Outcome outcomes[] = {confra::Outcome::kAWins, confra::Outcome::kBWins,
                                      confra::Outcome::kDraw};
  double worst_drift = 0.0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<GameRecord> games;
    std::set<std::string> seen;
    const std::size_t n = 50 + gen() % 400;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = gen() % names.size();
      std::size_t b = gen() % names.size();
      if (b == a) b = (a + 1) % names.size();
      games.push_back(Game(names[a], names[b], outcomes[gen() % 3], static_cast<int>(i)));
      seen.insert(names[a]);
      seen.insert(names[b]);
    }
    const auto ratings = RunTournament(games, gen(), 32.0);
    double sum = 0.0;
    for (const auto& [p, r] : ratings) sum += r;
    const double drift =
        std::fabs(sum - kInitialRating * static_cast<double>(seen.size())) /
        static_cast<double>(n);
    worst_drift = std::max(worst_drift, drift);
    ++checked;
  }
  const bool conserved = worst_drift <= kEloConservationPerGame;

  std::vector<GameRecord> two, flipped;
  for (int i = 0; i < 120; ++i) {
    two.push_back(Game("a", "b", outcomes[gen() % 3], i));
    flipped.push_back(two.back());
    flipped.back().outcome = Flip(two.back().outcome);
  }
  const TournamentResult r1 = RepeatedTournament(two, 1000, 99);
  const TournamentResult r2 = RepeatedTournament(flipped, 1000, 99);
  const bool symmetric = r1.win_counts.at("a") == r2.win_counts.at("b") &&
                         r1.win_counts.at("b") == r2.win_counts.at("a") &&
                         r1.tie_count == r2.tie_count;

  std::vector<GameRecord> draws;
  for (int i = 0; i < 100; ++i) draws.push_back(Game("a", "b", confra::Outcome::kDraw, i));
  const TournamentResult rd = RepeatedTournament(draws, 1000, 5);
  const bool all_ties = rd.win_counts.at("a") == 0 && rd.win_counts.at("b") == 0 &&
                        rd.tie_count == 1000;

  return {conserved && symmetric && all_ties ? Status::kPass : Status::kFail,
          fmt::format("conservation max drift {:.2e}/game over {} tournaments; flip "
                      "a={}/b={} vs a={}/b={}; all-draw wins {}+{} ties {}",
                      worst_drift, checked, r1.win_counts.at("a"), r1.win_counts.at("b"),
                      r2.win_counts.at("a"), r2.win_counts.at("b"), rd.win_counts.at("a"),
                      rd.win_counts.at("b"), rd.tie_count)};
}

Outcome PowerLaw() {
  const auto xs = oracle::SampleZeta(10000, 2.5, 3, kPowerLawSeed);
  const PowerLawFit fit = FitDiscretePowerLaw(xs);
  const PowerLawFit exact = FitDiscretePowerLaw(xs, PowerLawMethod::kExactZeta);
  const bool alpha_ok = Near(fit.alpha, 2.5, kAlphaTol);
  const bool xmin_ok = Near(static_cast<double>(fit.xmin), 3.0, kXminTol);

  std::mt19937_64 gen(7);
  std::size_t agreed = 0, compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> v;
    if (trial % 3 == 0) {
      v = oracle::SampleZeta(1 + gen() % 1000, 1.6 + (gen() % 200) / 100.0, 1 + gen() % 5,
                             gen());
    } else {
      const std::size_t n = 2 + gen() % 999;
      const std::size_t hi = 2 + gen() % 80;
      for (std::size_t i = 0; i < n; ++i) v.push_back(1 + gen() % hi);
    }
    const auto want = oracle::BruteForcePowerLaw(v);
    const auto got = TryFitDiscretePowerLaw(v);
    ++compared;
    if (!want && !got) {
      ++agreed;
    } else if (want && got && want->xmin == got->xmin && want->n_tail == got->n_tail &&
               Near(want->alpha, got->alpha, 1e-9) && Near(want->ks, got->ks_statistic, 1e-9)) {
      ++agreed;
    }
  }
  const bool oracle_ok = agreed == compared;
  return {alpha_ok && xmin_ok && oracle_ok ? Status::kPass : Status::kFail,
          fmt::format("seed {}: alpha {:.3f} (want 2.5+-{}), xmin {} (want 3+-{}); "
                      "exact-zeta mode alpha {:.3f} xmin {}; oracle agreement {}/{}",
                      kPowerLawSeed, fit.alpha, kAlphaTol, fit.xmin, kXminTol, exact.alpha,
                      exact.xmin, agreed, compared)};
}

ModelPrediction Pred(std::string id, bool pos, std::vector<Span> spans = {}) {
  ModelPrediction p;
  p.message_id = std::move(id);
  p.model_id = "m";
  p.is_conspiratorial = pos;
  p.spans = std::move(spans);
  return p;
}

MessageAnnotation Ann(std::string id, bool pos, std::vector<Span> spans = {}) {
  MessageAnnotation a;
  a.message_id = std::move(id);
  a.annotator_id = "g";
  a.is_conspiratorial = pos;
  a.spans = std::move(spans);
  return a;
}

double KappaOf(const std::vector<int>& a, const std::vector<int>& b) {
  std::unique_ptr<bool[]> x(new bool[a.size()]), y(new bool[b.size()]);
  for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] != 0;
  for (std::size_t i = 0; i < b.size(); ++i) y[i] = b[i] != 0;
  return CohensKappa(std::span<const bool>(x.get(), a.size()),
                     std::span<const bool>(y.get(), b.size()));
}

Outcome MetricOracles() {
  std::vector<std::string> bad;
  auto check = [&](const std::string& what, double got, double want) {
    if (!Near(got, want, kMetricTol)) bad.push_back(fmt::format("{} {} != {}", what, got, want));
  };
  {
    const std::vector<ModelPrediction> p = {Pred("1", true),  Pred("2", true),
                                            Pred("3", true),  Pred("4", true),
                                            Pred("5", false), Pred("6", false)};
    const std::vector<MessageAnnotation> g = {Ann("1", true),  Ann("2", true),
                                              Ann("3", false), Ann("4", false),
                                              Ann("5", true),  Ann("6", true)};
    const PrfScores s = ClassificationMetrics(p, g);
    check("cls P", s.precision, 0.5);
    check("cls R", s.recall, 0.5);
    check("cls F1", s.f1, 0.5);
    const std::vector<ModelPrediction> neg = {Pred("1", false), Pred("2", false),
                                              Pred("3", false), Pred("4", false),
                                              Pred("5", false), Pred("6", false)};
    const PrfScores z = ClassificationMetrics(neg, g);
    check("all-neg P", z.precision, 0.0);
    check("all-neg F1", z.f1, 0.0);
  }
  {
    const Message ten{"t", "ch_x", "2024-01-01T00:00:00Z", "a b c d e f g h i j"};
    auto tokens = [&](std::size_t first, std::size_t last) {
      return Span{SpanLabel::kPlanEvent, 2 * first, 2 * last + 1,
                  Utf8Substr(ten.text, 2 * first, 2 * last + 1)};
    };
    const Corpus c({ten});
    const std::vector<ModelPrediction> p = {Pred("t", true, {tokens(5, 8)})};
    const std::vector<MessageAnnotation> g = {Ann("t", true, {tokens(3, 6)})};
    const PrfScores o = SpanMetrics(p, g, c, SpanLabel::kPlanEvent, SpanMatchMode::kTokenOverlap);
    const PrfScores x = SpanMetrics(p, g, c, SpanLabel::kPlanEvent, SpanMatchMode::kExact);
    check("overlap P", o.precision, 0.5);
    check("overlap R", o.recall, 0.5);
    check("overlap F1", o.f1, 0.5);
    check("exact F1", x.f1, 0.0);
    const std::vector<ModelPrediction> same = {Pred("t", true, {tokens(3, 6)})};
    check("identity overlap F1",
          SpanMetrics(same, g, c, SpanLabel::kPlanEvent, SpanMatchMode::kTokenOverlap).f1, 1.0);
    check("identity exact F1",
          SpanMetrics(same, g, c, SpanLabel::kPlanEvent, SpanMatchMode::kExact).f1, 1.0);
  }
  check("kappa hand", KappaOf({1, 1, 0, 0}, {1, 0, 0, 1}), 0.0);
  check("kappa identity", KappaOf({1, 0, 1, 1, 0}, {1, 0, 1, 1, 0}), 1.0);

  std::mt19937_64 gen(31337);
  std::size_t agreed = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 29;
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(gen() % 2);
      b[i] = static_cast<int>(gen() % 2);
    }
    const auto want = oracle::Kappa(a, b);
    try {
      const double got = KappaOf(a, b);
      agreed += want && Near(got, *want, 1e-12) ? 1 : 0;
    } catch (const Error& e) {
      agreed += !want && e.code() == ErrorCode::kKappaUndefined ? 1 : 0;
    }
  }
  if (agreed != 100) bad.push_back(fmt::format("kappa oracle {}/100", agreed));
  return {bad.empty() ? Status::kPass : Status::kFail,
          bad.empty() ? fmt::format("hand examples exact; kappa oracle {}/100", agreed)
                      : fmt::format("{}", fmt::join(bad, "; "))};
}

Outcome PromptGoldens() {
  const std::string canary = ReadFile(GoldenPath("canary.txt"));
  std::vector<std::string> mismatched;
  const std::pair<PromptStrategy, const char*> cases[] = {
      {PromptStrategy::kZeroShot, "zero_shot.txt"},
      {PromptStrategy::kFewShot, "few_shot.txt"},
      {PromptStrategy::kFrameGuided, "frame_guided.txt"}};
  for (const auto& [s, file] : cases) {
    if (BuildPrompt(s, canary, CanonicalExamples()) != ReadFile(GoldenPath(file))) {
      mismatched.push_back(file);
    }
  }
  return {mismatched.empty() ? Status::kPass : Status::kFail,
          mismatched.empty() ? "3/3 prompts byte-equal"
                             : fmt::format("mismatch: {}", fmt::join(mismatched, ", "))};
}

Outcome SpanContract() {
  StubModelClient stub("stub");
  const auto& ex = CanonicalExamples();
  std::size_t preds = 0, spans = 0, violations = 0;
  auto audit = [&](const ModelPrediction& p, const Message& m) {
    ++preds;
    for (const Span& s : p.spans) {
      ++spans;
      violations += Utf8Substr(m.text, s.start, s.end) == s.text ? 0 : 1;
    }
  };
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const Message m{"ex-" + std::to_string(i), "ch_x", "2024-01-01T00:00:00Z",
                    ex[i].input_text};
    for (auto s : {PromptStrategy::kZeroShot, PromptStrategy::kFewShot,
                   PromptStrategy::kFrameGuided}) {
      audit(ParseOutput(stub.Complete(BuildPrompt(s, m.text, ex), m.id, s), m), m);
    }
  }
  const Corpus corpus = ReadCorpus(DataPath("pipeline/corpus.jsonl"));
  const AnnotationRun run =
      AnnotateMessages(corpus.messages(), PromptStrategy::kFewShot, ex, stub, 4);
  for (std::size_t i = 0; i < run.predictions.size(); ++i) {
    audit(run.predictions[i], *corpus.Find(run.predictions[i].message_id));
  }
  return {violations == 0 && spans > 0 ? Status::kPass : Status::kFail,
          fmt::format("{} predictions, {} spans, {} not exact substrings", preds, spans,
                      violations)};
}

Outcome Determinism() {
  TempDir a, b;
  const auto ra = testing_util::RunStubPipeline(a.path());
  const auto rb = testing_util::RunStubPipeline(b.path());
  if (!ra.ok || !rb.ok) {
    const auto& bad = ra.ok ? rb : ra;
    return {Status::kFail, fmt::format("step {} failed: {}", bad.failed_step, bad.stderr_text)};
  }
  std::size_t differ = 0;
  for (const auto& [name, digest] : ra.digests) {
    auto it = rb.digests.find(name);
    differ += it == rb.digests.end() || it->second != digest ? 1 : 0;
  }
  const bool same = differ == 0 && ra.digests.size() == rb.digests.size() &&
                    ra.run_digests == rb.run_digests;
  return {same ? Status::kPass : Status::kFail,
          fmt::format("{} artifacts, {} run digests, {} differ", ra.digests.size(),
                      ra.run_digests.size(), differ)};
}

int RunDesk(Report& report) {
  report.Line("elo-properties", Guard(EloProperties));
  report.Line("power-law", Guard(PowerLaw));
  report.Line("metric-oracles", Guard(MetricOracles));
  report.Line("prompt-goldens", Guard(PromptGoldens));
  report.Line("span-contract", Guard(SpanContract));
  report.Line("e2e-determinism", Guard(Determinism));
  return report.failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Data criteria

struct DataSet {
  fs::path root;
  std::optional<Corpus> corpus;
  std::vector<MessageAnnotation> annotations;
};

Outcome LabelDistributionCheck(const DataSet& d) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto anns = ReadAnnotations(d.root / "annotations.jsonl");
  std::size_t c = 0, non = 0;
  for (const MessageAnnotation& a : anns) {
    if (a.is_conspiratorial) {
      ++c;
    } else if (!a.supports_ct.value_or(false)) {
      ++non;
    }
  }
  const double secs = Seconds(t0);
  const double n = static_cast<double>(anns.size());
  const double pc = 100.0 * static_cast<double>(c) / n;
  const double pn = 100.0 * static_cast<double>(non) / n;
  const bool ok = Near(pc, 20.63, kLabelPctTol) && Near(pn, 77.00, kLabelPctTol) && secs < 1.0;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("per annotation record: {:.2f}% conspiratorial / {:.2f}% non "
                      "(want 20.63 / 77.00 +-{}); {} records; {:.3f} s",
                      pc, pn, kLabelPctTol, anns.size(), secs)};
}

Outcome KappaCheck(const DataSet& d) {
  const auto t0 = std::chrono::steady_clock::now();
  const KappaSummary k = ClassificationAgreement(d.annotations);
  const double secs = Seconds(t0);
  const bool ok = Near(k.mean, 0.41, kKappaTol) && Near(k.sd, 0.20, kKappaTol) && secs < 5.0;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("mean {:.3f} sd {:.3f} over {} pairs, {} skipped (want 0.41 / 0.20 "
                      "+-{}); {:.3f} s",
                      k.mean, k.sd, k.pairs.size(), k.skipped_pairs, kKappaTol, secs)};
}

Outcome SpanKappaCheck(const DataSet& d) {
  const std::map<SpanLabel, double> want = {{SpanLabel::kPlanEvent, 0.808},
                                            {SpanLabel::kCallToAction, 0.750},
                                            {SpanLabel::kOutGroup, 0.717},
                                            {SpanLabel::kSecret, 0.683},
                                            {SpanLabel::kInGroup, 0.633}};
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::vector<std::string> parts;
  for (const auto& [label, target] : want) {
    const KappaSummary k = SpanAgreement(d.annotations, label, *d.corpus);
    ok = ok && Near(k.mean, target, kSpanKappaTol);
    parts.push_back(fmt::format("{} {:.3f}/{:.3f}", LabelName(label), k.mean, target));
  }
  const double secs = Seconds(t0);
  ok = ok && secs < 30.0;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("token-level unit; {} (+-{}); {:.2f} s", fmt::join(parts, ", "),
                      kSpanKappaTol, secs)};
}

bool HasTokenColumns(const fs::path& annotations) {
  std::ifstream in(annotations);
  std::string line;
  for (int i = 0; i < 50 && std::getline(in, line); ++i) {
    if (line.find("\"tokens\"") != std::string::npos) return true;
  }
  return false;
}

Outcome FrameCheck(const DataSet& d) {
  fs::path fn = d.root / "framenet";
  if (const char* env = std::getenv("CONFRA_FRAMENET")) fn = env;
  if (!fs::exists(fn / "luIndex.xml")) {
    return {Status::kSkip, fmt::format("no FrameNet 1.7 at {}", fn.string())};
  }
  TempDir out;
  const fs::path anns = d.root / "annotations.jsonl";
  std::vector<std::string> args = {"--out-dir", out.path().string(),
                                   "map-frames", "--annotations", anns.string(),
                                   "--corpus", (d.root / "corpus.jsonl").string(),
                                   "--framenet-root", fn.string(), "--tail-filter"};
  const bool pretagged = HasTokenColumns(anns);
  if (pretagged) args.push_back("--pretagged");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = RunCli(args);
  const double secs = Seconds(t0);
  if (r.code != 0) return {Status::kFail, "map-frames failed: " + r.err};
  const json dist = json::parse(ReadFile(out / "framedist.json"));
  const double unique = dist["unique"].get<double>();
  const double total = dist["total"].get<double>();
  const bool ok = std::fabs(unique - 54) <= kFrameRelTol * 54 &&
                  std::fabs(total - 2526) <= kFrameRelTol * 2526;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("{} frames / {} occurrences (want 54 / 2526 +-10%); lemmas from {}; "
                      "xmin {}; {:.2f} s",
                      unique, total, pretagged ? "token columns" : "built-in tables",
                      dist["fit"]["xmin"].dump(), secs)};
}

// Frame-guided win count of one ELO setting, or nullopt without inputs.
struct EloRun {
  std::size_t wins = 0;
  std::string player;
  double secs = 0.0;
};

std::optional<EloRun> RunEloSetting(const fs::path& root, const std::string& kind,
                                    std::uint64_t seed, std::string* error) {
  std::vector<std::string> source;
  const fs::path games = root / "elo" / (kind + "_games.jsonl");
  if (fs::exists(games)) {
    source = {"--games", games.string()};
  } else if (kind == "span" && fs::exists(root / "votes.jsonl") &&
             fs::exists(root / "candidates.json")) {
    source = {"--votes", (root / "votes.jsonl").string(), "--candidates",
              (root / "candidates.json").string()};
  } else if (kind == "classification" && fs::exists(root / "judgments.jsonl") &&
             fs::exists(root / "predictions_frame_guided.jsonl") &&
             fs::exists(root / "predictions_few_shot.jsonl")) {
    source = {"--judgments", (root / "judgments.jsonl").string(), "--predictions-a",
              (root / "predictions_frame_guided.jsonl").string(), "--predictions-b",
              (root / "predictions_few_shot.jsonl").string()};
  } else {
    return std::nullopt;
  }
  TempDir out;
  std::vector<std::string> args = {"--seed", std::to_string(seed), "--out-dir",
                                   out.path().string(), "elo", "--repetitions", "1000"};
  args.insert(args.end(), source.begin(), source.end());
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = RunCli(args);
  EloRun run;
  run.secs = Seconds(t0);
  if (r.code != 0) {
    *error = r.err;
    return run;
  }
  const json res = json::parse(ReadFile(out / "eloresult.json"));
  for (const auto& [p, n] : res["win_counts"].items()) {
    if (p.find("frame_guided") != std::string::npos) {
      run.player = p;
      run.wins = n.get<std::size_t>();
    }
  }
  if (run.player.empty()) *error = "no player named *frame_guided*";
  return run;
}

Outcome EloCheck(const DataSet& d) {
  const std::uint64_t seed = std::random_device{}();
  std::vector<std::string> parts;
  bool ok = true;
  bool any = false;
  for (const auto& [kind, target] :
       std::vector<std::pair<std::string, double>>{{"classification", 830},
                                                   {"span", 213}}) {
    std::string err;
    const auto run = RunEloSetting(d.root, kind, seed, &err);
    if (!run) {
      parts.push_back(kind + " no vote data");
      continue;
    }
    any = true;
    if (!err.empty()) {
      ok = false;
      parts.push_back(fmt::format("{} error: {}", kind, err));
      continue;
    }
    ok = ok && Near(static_cast<double>(run->wins), target, kEloWinTol) && run->secs < 10.0;
    parts.push_back(fmt::format("{} {}/1000 (want {}+-{}) {:.2f} s", kind, run->wins,
                                target, kEloWinTol, run->secs));
  }
  if (!any) return {Status::kSkip, "no vote data released"};
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("seed {}; {}", seed, fmt::join(parts, "; "))};
}

int RunData(Report& report, fs::path root) {
  const char* ids[] = {"label-distribution", "classification-kappa", "span-kappa",
                       "frame-mapping", "elo-replication"};
  if (root.empty()) {
    if (const char* env = std::getenv("CONFRA_DATA")) root = env;
  }
  if (root.empty() || !fs::exists(root / "corpus.jsonl") ||
      !fs::exists(root / "annotations.jsonl")) {
    for (const char* id : ids) {
      report.Line(id, {Status::kSkip, "dataset not available (set CONFRA_DATA)"});
    }
    return 77;
  }
  DataSet d;
  d.root = root;
  try {
    d.corpus = ReadCorpus(root / "corpus.jsonl");
    d.annotations = ReadAnnotations(root / "annotations.jsonl", &*d.corpus);
  } catch (const std::exception& e) {
    for (const char* id : ids) report.Line(id, {Status::kFail, e.what()});
    return 1;
  }
  report.Line(ids[0], Guard([&] { return LabelDistributionCheck(d); }));
  report.Line(ids[1], Guard([&] { return KappaCheck(d); }));
  report.Line(ids[2], Guard([&] { return SpanKappaCheck(d); }));
  report.Line(ids[3], Guard([&] { return FrameCheck(d); }));
  report.Line(ids[4], Guard([&] { return EloCheck(d); }));
  return report.failed ? 1 : 0;
}

}  // namespace
}  // namespace confra

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  bool desk = false, data = false;
  std::string data_dir;
  std::vector<std::string> expect_fail;
  app.add_flag("--desk", desk, "Criteria checkable from fixtures");
  app.add_flag("--data", data, "Criteria that need the released dataset");
  app.add_option("--data-dir", data_dir);
  app.add_option("--expect-fail", expect_fail, "Criterion id known to fail");
  CLI11_PARSE(app, argc, argv);
  if (!desk && !data) desk = data = true;

  confra::Report report;
  report.expect_fail.insert(expect_fail.begin(), expect_fail.end());
  const int desk_rc = desk ? confra::RunDesk(report) : 0;
  if (!data) return desk_rc;
  const int data_rc = confra::RunData(report, data_dir);
  if (!desk) return data_rc;
  return std::max(desk_rc, data_rc == 77 ? 0 : data_rc);
}
