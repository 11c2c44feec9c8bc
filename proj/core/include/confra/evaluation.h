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

// Classification and span metrics, Cohen's kappa, best-worst scaling,
// vote-to-game conversion and the randomized ELO tournament.

#ifndef CONFRA_EVALUATION_H_
#define CONFRA_EVALUATION_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confra/corpus.h"
#include "confra/model.h"
#include "json.hpp"

namespace confra {

// ---------------------------------------------------------------------------
// Precision / recall / F1

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
};

// Undefined ratios (0/0) are reported as 0.
PrfScores ScoresFromCounts(const ConfusionCounts& counts);

// Conspiratorial is the positive class. `gold` holds one record per message
// (see AggregateGold). Throws Error(kIdMismatch) naming the ids present on
// one side only.
PrfScores ClassificationMetrics(std::span<const ModelPrediction> preds,
                                std::span<const MessageAnnotation> gold);

enum class SpanMatchMode { kTokenOverlap, kExact };

std::string_view SpanMatchModeName(SpanMatchMode mode);
SpanMatchMode ParseSpanMatchMode(std::string_view name);

// Token overlap: a token (see Tokenize) counts as covered when it intersects
// a span of `label`; counts are summed over messages (micro average).
// Exact: a predicted span matches iff (start, end, label) equals a gold span.
// Messages come from `corpus`; id sets must agree as in
// ClassificationMetrics.
PrfScores SpanMetrics(std::span<const ModelPrediction> preds,
                      std::span<const MessageAnnotation> gold,
                      const Corpus& corpus, SpanLabel label,
                      SpanMatchMode mode);

// Throws Error(kUnknownLabel) for names outside the five labels.
PrfScores SpanMetrics(std::span<const ModelPrediction> preds,
                      std::span<const MessageAnnotation> gold,
                      const Corpus& corpus, std::string_view label,
                      SpanMatchMode mode);

// One gold record per message: majority is_conspiratorial (a tie counts as
// conspiratorial) and the union of the spans of annotators who said yes.
std::vector<MessageAnnotation> AggregateGold(
    std::span<const MessageAnnotation> annotations);

// ---------------------------------------------------------------------------
// Agreement

// Binary Cohen's kappa. Throws Error(kKappaUndefined) when chance agreement
// is 1 (both raters constant on the same value) and kInvalidArgument on
// length mismatch or empty input.
double CohensKappa(std::span<const bool> a, std::span<const bool> b);

// Kappa over the messages both annotators labeled. Throws Error(kNoOverlap)
// when they share none.
double PairwiseCohensKappa(std::span<const MessageAnnotation> ann_a,
                           std::span<const MessageAnnotation> ann_b);

// Token-level in-span/out-of-span kappa for `label`, pooled over the
// messages both annotators marked conspiratorial. Throws Error(kNoOverlap)
// when there are none.
double SpanAgreementKappa(std::span<const MessageAnnotation> ann_a,
                          std::span<const MessageAnnotation> ann_b,
                          SpanLabel label, const Corpus& corpus);

struct PairKappa {
  std::string annotator_a;
  std::string annotator_b;
  double kappa = 0.0;
};

struct KappaSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1); 0 for one pair
  std::vector<PairKappa> pairs;
  std::size_t skipped_pairs = 0;  // undefined kappa or no overlap
};

// All annotator pairs of a multi-annotator file. Pairs whose kappa is
// undefined are skipped and counted.
KappaSummary ClassificationAgreement(
    std::span<const MessageAnnotation> annotations);
KappaSummary SpanAgreement(std::span<const MessageAnnotation> annotations,
                           SpanLabel label, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Votes and games

struct VoteRecord {
  std::string item_id;
  std::string annotator_id;
  std::string best;   // candidate id
  std::string worst;  // candidate id

  friend bool operator==(const VoteRecord&, const VoteRecord&) = default;
};

// Binary judgment on a message (session-two classification task).
struct JudgmentRecord {
  std::string item_id;  // message id
  std::string annotator_id;
  bool is_conspiratorial = false;

  friend bool operator==(const JudgmentRecord&,
                         const JudgmentRecord&) = default;
};

nlohmann::ordered_json ToJson(const VoteRecord& v);
VoteRecord VoteFromJson(const nlohmann::json& j);
nlohmann::ordered_json ToJson(const JudgmentRecord& v);
JudgmentRecord JudgmentFromJson(const nlohmann::json& j);

// Throws Error(kInvalidRecord) when best == worst or ids are empty.
void CheckVote(const VoteRecord& v);

std::vector<VoteRecord> ReadVotes(const std::filesystem::path& path);
std::vector<JudgmentRecord> ReadJudgments(const std::filesystem::path& path);

// item id -> candidate ids shown for it.
using ItemCandidates = std::map<std::string, std::vector<std::string>>;

// (best - worst) / votes on items where the candidate was shown. Without
// `items`, a candidate counts as shown on items where it was ever picked.
std::map<std::string, double> BestWorstScores(
    std::span<const VoteRecord> votes, const ItemCandidates& items = {});

// The same ratio with candidates pooled by player (model).
std::map<std::string, double> BestWorstByPlayer(
    std::span<const VoteRecord> votes,
    const std::map<std::string, std::string>& candidate_player,
    const ItemCandidates& items = {});

enum class Outcome { kAWins, kBWins, kDraw };

std::string_view OutcomeName(Outcome o);
Outcome ParseOutcome(std::string_view name);
Outcome Flip(Outcome o);

struct GameRecord {
  std::string item_id;
  std::string player_a;
  std::string player_b;
  Outcome outcome = Outcome::kDraw;

  friend bool operator==(const GameRecord&, const GameRecord&) = default;
};

nlohmann::ordered_json ToJson(const GameRecord& g);
GameRecord GameFromJson(const nlohmann::json& j);

enum class GameRule {
  kMajority,  // one game per item, strict majority of favoring votes
  kPerVote,   // one game per vote (sensitivity analysis)
};

// A vote favors A when A's candidate is best or B's is worst (and not also
// the reverse). Items where no vote touches either player are skipped.
// Throws Error(kUnknownCandidate) for candidates missing from the map.
std::vector<GameRecord> VotesToGames(
    std::span<const VoteRecord> votes,
    const std::map<std::string, std::string>& candidate_player,
    const std::string& player_a, const std::string& player_b,
    GameRule rule = GameRule::kMajority);

// Classification games: the majority human judgment on each message is the
// reference (a tie yields a draw); the player whose prediction agrees with it
// while the other's does not wins. Messages missing a prediction from either
// player are skipped.
std::vector<GameRecord> JudgmentsToGames(
    std::span<const JudgmentRecord> judgments,
    std::span<const ModelPrediction> preds_a,
    std::span<const ModelPrediction> preds_b, const std::string& player_a,
    const std::string& player_b);

// ---------------------------------------------------------------------------
// ELO

inline constexpr double kInitialRating = 1000.0;
inline constexpr double kDefaultK = 32.0;

// Each side is updated with its own expectation; throws kInvalidArgument
// unless K > 0.
std::pair<double, double> EloUpdate(double ra, double rb, Outcome outcome,
                                    double k = kDefaultK);

// Shuffles a copy of `games` with `order_seed` and applies EloUpdate in
// order; every player starts at 1000. Throws kInvalidArgument on no games.
std::map<std::string, double> RunTournament(std::span<const GameRecord> games,
                                            std::uint64_t order_seed,
                                            double k = kDefaultK);

struct TournamentResult {
  std::map<std::string, std::size_t> win_counts;  // every player listed
  std::size_t tie_count = 0;
  std::size_t repetitions = 0;
  double k = kDefaultK;
  std::uint64_t base_seed = 0;
  std::vector<std::string> winner_log;  // "" marks a tie
  std::map<std::string, double> mean_final_ratings;
};

// Repetition i uses seed DeriveSeed(base_seed, i); the winner is the
// strictly highest final rating, otherwise the repetition is a tie.
// Repetitions run on up to `threads` threads (0 = hardware concurrency).
TournamentResult RepeatedTournament(std::span<const GameRecord> games,
                                    std::size_t repetitions,
                                    std::uint64_t base_seed,
                                    double k = kDefaultK,
                                    std::size_t threads = 0);

// eloresult.json
nlohmann::ordered_json ToJson(const TournamentResult& r);

// ---------------------------------------------------------------------------
// Reporting

struct MetricRow {
  std::string model;
  std::string strategy;
  std::string label;  // "is_conspiratorial" for classification rows
  std::string metric;
  double value = 0.0;
};

// Header "model,strategy,label,metric,value"; values printed with 6 decimals.
std::string MetricsCsv(std::span<const MetricRow> rows);

}  // namespace confra

#endif  // CONFRA_EVALUATION_H_
