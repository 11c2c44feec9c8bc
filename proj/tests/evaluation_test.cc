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


#include "confra/evaluation.h"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "confra/error.h"
#include "confra/text.h"
#include "oracles.h"
#include "test_util.h"

namespace confra {
namespace {

ModelPrediction Pred(std::string id, bool pos, std::vector<Span> spans = {}) {
  ModelPrediction p;
  p.message_id = std::move(id);
  p.model_id = "m";
  p.is_conspiratorial = pos;
  p.spans = std::move(spans);
  return p;
}

MessageAnnotation Ann(std::string id, std::string who, bool pos,
                      std::vector<Span> spans = {}) {
  MessageAnnotation a;
  a.message_id = std::move(id);
  a.annotator_id = std::move(who);
  a.is_conspiratorial = pos;
  a.spans = std::move(spans);
  return a;
}

// Ten one-letter tokens; token i occupies offsets [2i, 2i+1).
const Message kTen{"t", "ch_x", "2024-01-01T00:00:00Z", "a b c d e f g h i j"};

Span Tokens(SpanLabel l, std::size_t first, std::size_t last) {
  return {l, 2 * first, 2 * last + 1, Utf8Substr(kTen.text, 2 * first, 2 * last + 1)};
}

TEST(Classification, HandCounts) {
  // tp=2, fp=2, fn=2, tn=1.
  const std::vector<ModelPrediction> p = {Pred("1", true),  Pred("2", true),
                                          Pred("3", true),  Pred("4", true),
                                          Pred("5", false), Pred("6", false),
                                          Pred("7", false)};
  const std::vector<MessageAnnotation> g = {Ann("1", "g", true),  Ann("2", "g", true),
                                            Ann("3", "g", false), Ann("4", "g", false),
                                            Ann("5", "g", true),  Ann("6", "g", true),
                                            Ann("7", "g", false)};
  const PrfScores s = ClassificationMetrics(p, g);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 0.5);
  EXPECT_EQ(s.counts, (ConfusionCounts{2, 2, 2, 1}));
}

TEST(Classification, Conventions) {
  const std::vector<MessageAnnotation> g = {Ann("1", "g", true), Ann("2", "g", false)};
  const std::vector<ModelPrediction> neg = {Pred("1", false), Pred("2", false)};
  const PrfScores s = ClassificationMetrics(neg, g);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.f1, 0.0);
  const std::vector<ModelPrediction> same = {Pred("1", true), Pred("2", false)};
  EXPECT_DOUBLE_EQ(ClassificationMetrics(same, g).f1, 1.0);
}

TEST(Classification, IdMismatchListsMissingIds) {
  const std::vector<MessageAnnotation> g = {Ann("1", "g", true), Ann("2", "g", false)};
  const std::vector<ModelPrediction> p = {Pred("1", true), Pred("3", false)};
  try {
    ClassificationMetrics(p, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIdMismatch);
    EXPECT_NE(std::string(e.what()).find("[2]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("[3]"), std::string::npos) << e.what();
  }
}

TEST(Spans, OverlapHandExample) {
  const Corpus c({kTen});
  const auto P = SpanLabel::kPlanEvent;
  const std::vector<ModelPrediction> p = {Pred("t", true, {Tokens(P, 5, 8)})};
  const std::vector<MessageAnnotation> g = {Ann("t", "g", true, {Tokens(P, 3, 6)})};
  const PrfScores o = SpanMetrics(p, g, c, P, SpanMatchMode::kTokenOverlap);
  EXPECT_DOUBLE_EQ(o.precision, 0.5);
  EXPECT_DOUBLE_EQ(o.recall, 0.5);
  EXPECT_DOUBLE_EQ(o.f1, 0.5);
  const PrfScores x = SpanMetrics(p, g, c, P, SpanMatchMode::kExact);
  EXPECT_EQ(x.precision, 0.0);
  EXPECT_EQ(x.recall, 0.0);
  EXPECT_EQ(x.f1, 0.0);
  // Other labels are not scored against this one.
  EXPECT_EQ(SpanMetrics(p, g, c, SpanLabel::kSecret, SpanMatchMode::kTokenOverlap).f1, 0.0);
}

TEST(Spans, IdentityAndEmptyPrediction) {
  const Corpus c({kTen});
  const auto S = SpanLabel::kSecret;
  const std::vector<MessageAnnotation> g = {
      Ann("t", "g", true, {Tokens(S, 0, 1), Tokens(S, 7, 7)})};
  const std::vector<ModelPrediction> same = {Pred("t", true, g[0].spans)};
  for (auto mode : {SpanMatchMode::kTokenOverlap, SpanMatchMode::kExact}) {
    EXPECT_DOUBLE_EQ(SpanMetrics(same, g, c, S, mode).f1, 1.0);
  }
  const std::vector<ModelPrediction> empty = {Pred("t", true)};
  const PrfScores e = SpanMetrics(empty, g, c, S, SpanMatchMode::kTokenOverlap);
  EXPECT_EQ(e.precision, 0.0);
  EXPECT_EQ(e.recall, 0.0);
  EXPECT_THROW(SpanMetrics(same, g, c, "villain", SpanMatchMode::kExact), Error);
}

// Token-overlap F1 is not an upper bound on exact F1: a long wrong span
// swamps token counts while costing exact mode one false positive.
TEST(Spans, OverlapIsNotAlwaysAboveExact) {
  const Corpus c({kTen});
  const auto P = SpanLabel::kPlanEvent;
  const std::vector<MessageAnnotation> g = {
      Ann("t", "g", true, {Tokens(P, 0, 0), Tokens(P, 2, 9)})};
  const std::vector<ModelPrediction> p = {Pred("t", true, {Tokens(P, 0, 0), Tokens(P, 1, 1)})};
  const double exact = SpanMetrics(p, g, c, P, SpanMatchMode::kExact).f1;
  const double overlap = SpanMetrics(p, g, c, P, SpanMatchMode::kTokenOverlap).f1;
  EXPECT_DOUBLE_EQ(exact, 0.5);
  EXPECT_LT(overlap, exact);
}

// What does hold: every exact hit is also a token hit, and a perfect exact
// score implies a perfect overlap score.
TEST(Spans, ExactHitsImplyOverlapHits) {
  const Corpus c({kTen});
  const auto P = SpanLabel::kPlanEvent;
  std::mt19937_64 gen(5);
  auto random_spans = [&] {
    std::vector<Span> out;
    const int n = static_cast<int>(gen() % 4);
    for (int i = 0; i < n; ++i) {
      const std::size_t a = gen() % 10;
      const std::size_t b = a + gen() % (10 - a);
      out.push_back(Tokens(P, a, b));
    }
    return out;
  };
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<MessageAnnotation> g = {Ann("t", "g", true, random_spans())};
    const std::vector<ModelPrediction> p = {
        Pred("t", true, trial % 5 == 0 ? g[0].spans : random_spans())};
    const PrfScores x = SpanMetrics(p, g, c, P, SpanMatchMode::kExact);
    const PrfScores o = SpanMetrics(p, g, c, P, SpanMatchMode::kTokenOverlap);
    if (x.counts.tp > 0) EXPECT_GT(o.counts.tp, 0u);
    if (x.f1 == 1.0) EXPECT_DOUBLE_EQ(o.f1, 1.0);
  }
}

TEST(Gold, MajorityVoteAndSpanUnion) {
  const auto P = SpanLabel::kPlanEvent;
  const std::vector<MessageAnnotation> anns = {
      Ann("t", "a", true, {Tokens(P, 0, 1)}), Ann("t", "b", true, {Tokens(P, 0, 1), Tokens(P, 4, 5)}),
      Ann("t", "c", false), Ann("u", "a", false), Ann("u", "b", true, {Tokens(P, 2, 2)}),
      Ann("u", "c", false)};
  const auto gold = AggregateGold(anns);
  ASSERT_EQ(gold.size(), 2u);
  EXPECT_TRUE(gold[0].is_conspiratorial);
  EXPECT_EQ(gold[0].spans.size(), 2u);
  EXPECT_FALSE(gold[1].is_conspiratorial);
  EXPECT_TRUE(gold[1].spans.empty());
}

// std::vector<bool> is not contiguous, so copy into a plain array.
double Kappa(const std::vector<int>& a, const std::vector<int>& b) {
  std::unique_ptr<bool[]> x(new bool[a.size()]);
  std::unique_ptr<bool[]> y(new bool[b.size()]);
  for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] != 0;
  for (std::size_t i = 0; i < b.size(); ++i) y[i] = b[i] != 0;
  return CohensKappa(std::span<const bool>(x.get(), a.size()),
                     std::span<const bool>(y.get(), b.size()));
}

TEST(Kappa, HandExamples) {
  EXPECT_NEAR(Kappa({1, 1, 0, 0}, {1, 0, 0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(Kappa({1, 1, 0, 0}, {1, 1, 0, 0}), 1.0, 1e-12);
  EXPECT_NEAR(Kappa({1, 1, 0, 0}, {0, 0, 1, 1}), -1.0, 1e-12);
  try {
    Kappa({1, 1, 1}, {1, 1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.qualified_code(), "evaluation.KAPPA_UNDEFINED");
  }
  EXPECT_THROW(Kappa({1, 0}, {1}), Error);
}

TEST(Kappa, MatchesConfusionMatrixOracle) {
  std::mt19937_64 gen(99);
  int checked = 0;
  while (checked < 100) {
    const std::size_t n = 2 + gen() % 15;
    std::vector<int> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<int>(gen() % 2);
      y[i] = static_cast<int>(gen() % 2);
    }
    const auto want = oracle::Kappa(x, y);
    if (!want) {
      EXPECT_THROW(Kappa(x, y), Error);
      continue;
    }
    const double got = Kappa(x, y);
    EXPECT_NEAR(got, *want, 1e-12);
    EXPECT_GE(got, -1.0 - 1e-12);
    EXPECT_LE(got, 1.0 + 1e-12);
    ++checked;
  }
}

TEST(Kappa, SpanAgreementDisjointHalves) {
  const Message m{"t", "ch_x", "2024-01-01T00:00:00Z", "a b c d"};
  const Corpus c({m});
  const auto P = SpanLabel::kPlanEvent;
  const std::vector<MessageAnnotation> x = {Ann("t", "x", true, {{P, 0, 3, "a b"}})};
  const std::vector<MessageAnnotation> y = {Ann("t", "y", true, {{P, 4, 7, "c d"}})};
  EXPECT_NEAR(SpanAgreementKappa(x, y, P, c), -1.0, 1e-12);
  EXPECT_NEAR(SpanAgreementKappa(x, x, P, c), 1.0, 1e-12);
  const std::vector<MessageAnnotation> neg = {Ann("t", "y", false)};
  try {
    SpanAgreementKappa(x, neg, P, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoOverlap);
  }
}

TEST(Kappa, PairSummary) {
  const std::vector<MessageAnnotation> anns = {
      Ann("1", "a", true), Ann("2", "a", true), Ann("3", "a", false), Ann("4", "a", false),
      Ann("1", "b", true), Ann("2", "b", false), Ann("3", "b", false), Ann("4", "b", true),
      Ann("1", "c", true), Ann("2", "c", true), Ann("3", "c", false), Ann("4", "c", false)};
  const KappaSummary s = ClassificationAgreement(anns);
  ASSERT_EQ(s.pairs.size(), 3u);
  // a-b: 0, a-c: 1, b-c: 0.
  EXPECT_NEAR(s.mean, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.sd, std::sqrt(((1.0 / 9) * 2 + (4.0 / 9)) / 2), 1e-12);
  EXPECT_EQ(s.skipped_pairs, 0u);
}

TEST(BestWorst, HandExample) {
  std::vector<VoteRecord> votes;
  for (int i = 0; i < 10; ++i) {
    const std::string best = i < 7 ? "c" : "d";
    const std::string worst = i == 7 ? "c" : (i < 7 ? "e" : "e");
    votes.push_back({"item", "ann" + std::to_string(i), best, worst});
  }
  const ItemCandidates items = {{"item", {"c", "d", "e", "f"}}};
  const auto s = BestWorstScores(votes, items);
  EXPECT_DOUBLE_EQ(s.at("c"), 0.6);
  EXPECT_DOUBLE_EQ(s.at("f"), 0.0);
  EXPECT_DOUBLE_EQ(s.at("e"), -0.9);
  for (const auto& [_, v] : s) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  const std::vector<VoteRecord> stray = {{"other", "a", "c", "d"}};
  EXPECT_THROW(BestWorstScores(stray, items), Error);
  EXPECT_THROW(CheckVote({"i", "a", "c", "c"}), Error);
}

TEST(Games, MajorityRule) {
  const std::map<std::string, std::string> cp = {{"ca", "A"}, {"cb", "B"}, {"cx", "X"}};
  std::vector<VoteRecord> votes;
  for (int i = 0; i < 10; ++i) {
    votes.push_back({"i1", "v" + std::to_string(i), i < 7 ? "ca" : "cb", "cx"});
    votes.push_back({"i2", "v" + std::to_string(i), i < 5 ? "ca" : "cb", "cx"});
  }
  const auto games = VotesToGames(votes, cp, "A", "B");
  ASSERT_EQ(games.size(), 2u);
  EXPECT_EQ(games[0].outcome, Outcome::kAWins);
  EXPECT_EQ(games[1].outcome, Outcome::kDraw);
  EXPECT_EQ(VotesToGames(votes, cp, "A", "B", GameRule::kPerVote).size(), 20u);
  EXPECT_TRUE(VotesToGames({}, cp, "A", "B").empty());
  const std::vector<VoteRecord> unknown = {{"i", "v", "zz", "ca"}};
  EXPECT_THROW(VotesToGames(unknown, cp, "A", "B"), Error);
}

TEST(Games, FromJudgments) {
  const std::vector<JudgmentRecord> j = {{"1", "x", true}, {"1", "y", true}, {"2", "x", false},
                                         {"2", "y", false}, {"3", "x", true}, {"3", "y", false}};
  const std::vector<ModelPrediction> a = {Pred("1", true), Pred("2", true), Pred("3", true)};
  const std::vector<ModelPrediction> b = {Pred("1", false), Pred("2", false), Pred("3", true)};
  const auto games = JudgmentsToGames(j, a, b, "A", "B");
  ASSERT_EQ(games.size(), 3u);
  EXPECT_EQ(games[0].outcome, Outcome::kAWins);
  EXPECT_EQ(games[1].outcome, Outcome::kBWins);
  EXPECT_EQ(games[2].outcome, Outcome::kDraw);
}

TEST(Records, JsonRoundTrips) {
  const VoteRecord v{"i", "a", "c1", "c2"};
  EXPECT_EQ(VoteFromJson(ToJson(v)), v);
  const JudgmentRecord j{"i", "a", true};
  EXPECT_EQ(JudgmentFromJson(ToJson(j)), j);
  const GameRecord g{"i", "A", "B", Outcome::kBWins};
  EXPECT_EQ(GameFromJson(ToJson(g)), g);
  EXPECT_THROW(GameFromJson(ToJson(GameRecord{"i", "A", "A", Outcome::kDraw})), Error);
}

TEST(Report, CsvQuoting) {
  const std::vector<MetricRow> rows = {{"m,1", "few_shot", "secret", "f1", 0.25},
                                       {"m\"2", "zero_shot", "is_conspiratorial", "precision", 1}};
  const std::string csv = MetricsCsv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,strategy,label,metric,value");
  EXPECT_NE(csv.find("\"m,1\",few_shot,secret,f1,0.250000"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\"m\"\"2\""), std::string::npos) << csv;
}

}  // namespace
}  // namespace confra
