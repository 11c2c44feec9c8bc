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

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <unordered_map>

#include "confra/error.h"
#include "confra/fileio.h"
#include "confra/rng.h"
#include "confra/text.h"

namespace confra {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kModule[] = "evaluation";

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

template <typename A, typename B>
void CheckSameIds(std::span<const A> left, std::span<const B> right,
                  const char* left_name, const char* right_name) {
  std::set<std::string> l, r;
  for (const A& a : left) l.insert(a.message_id);
  for (const B& b : right) r.insert(b.message_id);
  if (l.size() != left.size()) {
    throw Error(ErrorCode::kIdMismatch, kModule,
                fmt::format("{} contain duplicate message ids", left_name));
  }
  if (r.size() != right.size()) {
    throw Error(ErrorCode::kIdMismatch, kModule,
                fmt::format("{} contain duplicate message ids", right_name));
  }
  std::vector<std::string> only_l, only_r;
  std::set_difference(l.begin(), l.end(), r.begin(), r.end(),
                      std::back_inserter(only_l));
  std::set_difference(r.begin(), r.end(), l.begin(), l.end(),
                      std::back_inserter(only_r));
  if (only_l.empty() && only_r.empty()) return;
  auto head = [](const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size() && i < 10; ++i) {
      if (i) out += ", ";
      out += ids[i];
    }
    if (ids.size() > 10) out += fmt::format(", ... ({} total)", ids.size());
    return out;
  };
  throw Error(ErrorCode::kIdMismatch, kModule,
              fmt::format("missing from {}: [{}]; missing from {}: [{}]",
                          right_name, head(only_l), left_name, head(only_r)));
}

}  // namespace

PrfScores ScoresFromCounts(const ConfusionCounts& c) {
  PrfScores s;
  s.counts = c;
  s.precision = Ratio(c.tp, c.tp + c.fp);
  s.recall = Ratio(c.tp, c.tp + c.fn);
  s.f1 = s.precision + s.recall == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

PrfScores ClassificationMetrics(std::span<const ModelPrediction> preds,
                                std::span<const MessageAnnotation> gold) {
  CheckSameIds(preds, gold, "predictions", "gold");
  std::unordered_map<std::string, bool> truth;
  for (const MessageAnnotation& g : gold) truth[g.message_id] = g.is_conspiratorial;
  ConfusionCounts c;
  for (const ModelPrediction& p : preds) {
    const bool t = truth.at(p.message_id);
    if (p.is_conspiratorial && t) ++c.tp;
    if (p.is_conspiratorial && !t) ++c.fp;
    if (!p.is_conspiratorial && t) ++c.fn;
    if (!p.is_conspiratorial && !t) ++c.tn;
  }
  return ScoresFromCounts(c);
}

std::string_view SpanMatchModeName(SpanMatchMode mode) {
  return mode == SpanMatchMode::kExact ? "exact" : "token_overlap";
}

SpanMatchMode ParseSpanMatchMode(std::string_view name) {
  if (name == "exact") return SpanMatchMode::kExact;
  if (name == "token_overlap") return SpanMatchMode::kTokenOverlap;
  throw Error(ErrorCode::kInvalidArgument, kModule,
              fmt::format("unknown span match mode '{}'", name));
}

namespace {

const Message& RequireMessage(const Corpus& corpus, const std::string& id) {
  const Message* m = corpus.Find(id);
  if (!m) {
    throw Error(ErrorCode::kIdMismatch, kModule,
                fmt::format("message '{}' is not in the corpus", id));
  }
  return *m;
}

// Indices of the tokens of `tokens` touched by spans of `label`.
std::vector<bool> Coverage(const std::vector<Token>& tokens,
                           std::span<const Span> spans, SpanLabel label) {
  std::vector<bool> covered(tokens.size(), false);
  for (const Span& s : spans) {
    if (s.label != label) continue;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].start < s.end && s.start < tokens[i].end) covered[i] = true;
    }
  }
  return covered;
}

}  // namespace

PrfScores SpanMetrics(std::span<const ModelPrediction> preds,
                      std::span<const MessageAnnotation> gold,
                      const Corpus& corpus, SpanLabel label,
                      SpanMatchMode mode) {
  CheckSameIds(preds, gold, "predictions", "gold");
  std::unordered_map<std::string, const MessageAnnotation*> by_id;
  for (const MessageAnnotation& g : gold) by_id[g.message_id] = &g;
  ConfusionCounts c;
  for (const ModelPrediction& p : preds) {
    const MessageAnnotation& g = *by_id.at(p.message_id);
    if (mode == SpanMatchMode::kExact) {
      using Key = std::tuple<std::size_t, std::size_t>;
      std::set<Key> ps, gs;
      for (const Span& s : p.spans) {
        if (s.label == label) ps.emplace(s.start, s.end);
      }
      for (const Span& s : g.spans) {
        if (s.label == label) gs.emplace(s.start, s.end);
      }
      for (const Key& k : ps) (gs.count(k) ? c.tp : c.fp)++;
      for (const Key& k : gs) {
        if (!ps.count(k)) ++c.fn;
      }
      continue;
    }
    const std::vector<Token> tokens =
        Tokenize(RequireMessage(corpus, p.message_id).text);
    const std::vector<bool> pc = Coverage(tokens, p.spans, label);
    const std::vector<bool> gc = Coverage(tokens, g.spans, label);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (pc[i] && gc[i]) ++c.tp;
      if (pc[i] && !gc[i]) ++c.fp;
      if (!pc[i] && gc[i]) ++c.fn;
      if (!pc[i] && !gc[i]) ++c.tn;
    }
  }
  return ScoresFromCounts(c);
}

PrfScores SpanMetrics(std::span<const ModelPrediction> preds,
                      std::span<const MessageAnnotation> gold,
                      const Corpus& corpus, std::string_view label,
                      SpanMatchMode mode) {
  return SpanMetrics(preds, gold, corpus, ParseLabel(label), mode);
}

std::vector<MessageAnnotation> AggregateGold(
    std::span<const MessageAnnotation> annotations) {
  std::map<std::string, std::vector<const MessageAnnotation*>> by_msg;
  for (const MessageAnnotation& a : annotations) {
    by_msg[a.message_id].push_back(&a);
  }
  std::vector<MessageAnnotation> out;
  for (const auto& [id, anns] : by_msg) {
    MessageAnnotation g;
    g.message_id = id;
    g.annotator_id = "gold";
    const auto yes = static_cast<std::size_t>(std::count_if(
        anns.begin(), anns.end(),
        [](const MessageAnnotation* a) { return a->is_conspiratorial; }));
    g.is_conspiratorial = 2 * yes >= anns.size();
    if (g.is_conspiratorial) {
      std::set<std::tuple<SpanLabel, std::size_t, std::size_t>> seen;
      for (const MessageAnnotation* a : anns) {
        if (!a->is_conspiratorial) continue;
        for (const Span& s : a->spans) {
          if (seen.emplace(s.label, s.start, s.end).second) g.spans.push_back(s);
        }
      }
      std::sort(g.spans.begin(), g.spans.end(), [](const Span& x, const Span& y) {
        return std::tie(x.start, x.end, x.label) < std::tie(y.start, y.end, y.label);
      });
    }
    out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Agreement

namespace {

// 2x2 agreement table between two binary raters.
struct AgreementTable {
  std::size_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;

  void Add(bool a, bool b) {
    if (a && b) ++n11;
    if (a && !b) ++n10;
    if (!a && b) ++n01;
    if (!a && !b) ++n00;
  }
  std::size_t n() const { return n11 + n10 + n01 + n00; }

  double Kappa() const {
    const std::size_t total = n();
    // Chance agreement is 1 exactly when both raters use one identical label.
    if (n11 == total || n00 == total) {
      throw Error(ErrorCode::kKappaUndefined, kModule,
                  "both raters constant on the same label");
    }
    const double dn = static_cast<double>(total);
    const double po = static_cast<double>(n11 + n00) / dn;
    const double pa = static_cast<double>(n11 + n10) / dn;
    const double pb = static_cast<double>(n11 + n01) / dn;
    const double pe = pa * pb + (1.0 - pa) * (1.0 - pb);
    return (po - pe) / (1.0 - pe);
  }
};

std::map<std::string, const MessageAnnotation*> ById(
    std::span<const MessageAnnotation> anns) {
  std::map<std::string, const MessageAnnotation*> out;
  for (const MessageAnnotation& a : anns) out[a.message_id] = &a;
  return out;
}

}  // namespace

double CohensKappa(std::span<const bool> a, std::span<const bool> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                fmt::format("kappa needs equal, non-empty vectors ({} vs {})",
                            a.size(), b.size()));
  }
  AgreementTable t;
  for (std::size_t i = 0; i < a.size(); ++i) t.Add(a[i], b[i]);
  return t.Kappa();
}

double PairwiseCohensKappa(std::span<const MessageAnnotation> ann_a,
                           std::span<const MessageAnnotation> ann_b) {
  const auto b = ById(ann_b);
  AgreementTable t;
  for (const auto& [id, x] : ById(ann_a)) {
    auto it = b.find(id);
    if (it != b.end()) t.Add(x->is_conspiratorial, it->second->is_conspiratorial);
  }
  if (t.n() == 0) {
    throw Error(ErrorCode::kNoOverlap, kModule, "annotators share no messages");
  }
  return t.Kappa();
}

double SpanAgreementKappa(std::span<const MessageAnnotation> ann_a,
                          std::span<const MessageAnnotation> ann_b,
                          SpanLabel label, const Corpus& corpus) {
  const auto b = ById(ann_b);
  AgreementTable t;
  bool shared = false;
  for (const auto& [id, x] : ById(ann_a)) {
    auto it = b.find(id);
    if (it == b.end() || !x->is_conspiratorial ||
        !it->second->is_conspiratorial) {
      continue;
    }
    shared = true;
    const std::vector<Token> tokens = Tokenize(RequireMessage(corpus, id).text);
    const std::vector<bool> ca = Coverage(tokens, x->spans, label);
    const std::vector<bool> cb = Coverage(tokens, it->second->spans, label);
    for (std::size_t i = 0; i < tokens.size(); ++i) t.Add(ca[i], cb[i]);
  }
  if (!shared) {
    throw Error(ErrorCode::kNoOverlap, kModule,
                "annotators share no conspiratorial messages");
  }
  if (t.n() == 0) {
    throw Error(ErrorCode::kKappaUndefined, kModule,
                "shared messages have no tokens");
  }
  return t.Kappa();
}

namespace {

template <typename Fn>
KappaSummary AllPairs(std::span<const MessageAnnotation> annotations, Fn fn) {
  std::map<std::string, std::vector<MessageAnnotation>> by_annotator;
  for (const MessageAnnotation& a : annotations) {
    by_annotator[a.annotator_id].push_back(a);
  }
  KappaSummary s;
  for (auto i = by_annotator.begin(); i != by_annotator.end(); ++i) {
    for (auto j = std::next(i); j != by_annotator.end(); ++j) {
      try {
        s.pairs.push_back({i->first, j->first, fn(i->second, j->second)});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kKappaUndefined &&
            e.code() != ErrorCode::kNoOverlap) {
          throw;
        }
        ++s.skipped_pairs;
      }
    }
  }
  if (s.pairs.empty()) {
    throw Error(ErrorCode::kKappaUndefined, kModule,
                "no annotator pair has a defined kappa");
  }
  double sum = 0.0;
  for (const PairKappa& p : s.pairs) sum += p.kappa;
  s.mean = sum / static_cast<double>(s.pairs.size());
  if (s.pairs.size() > 1) {
    double ss = 0.0;
    for (const PairKappa& p : s.pairs) ss += (p.kappa - s.mean) * (p.kappa - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.pairs.size() - 1));
  }
  return s;
}

}  // namespace

KappaSummary ClassificationAgreement(
    std::span<const MessageAnnotation> annotations) {
  return AllPairs(annotations, [](const auto& a, const auto& b) {
    return PairwiseCohensKappa(a, b);
  });
}

KappaSummary SpanAgreement(std::span<const MessageAnnotation> annotations,
                           SpanLabel label, const Corpus& corpus) {
  return AllPairs(annotations, [&](const auto& a, const auto& b) {
    return SpanAgreementKappa(a, b, label, corpus);
  });
}

// ---------------------------------------------------------------------------
// Votes

ordered_json ToJson(const VoteRecord& v) {
  return {{"item_id", v.item_id},
          {"annotator_id", v.annotator_id},
          {"best", v.best},
          {"worst", v.worst}};
}

VoteRecord VoteFromJson(const json& j) {
  VoteRecord v;
  v.item_id = j.at("item_id").get<std::string>();
  v.annotator_id = j.at("annotator_id").get<std::string>();
  v.best = j.at("best").get<std::string>();
  v.worst = j.at("worst").get<std::string>();
  return v;
}

ordered_json ToJson(const JudgmentRecord& v) {
  return {{"item_id", v.item_id},
          {"annotator_id", v.annotator_id},
          {"is_conspiratorial", v.is_conspiratorial}};
}

JudgmentRecord JudgmentFromJson(const json& j) {
  JudgmentRecord v;
  v.item_id = j.at("item_id").get<std::string>();
  v.annotator_id = j.at("annotator_id").get<std::string>();
  v.is_conspiratorial = j.at("is_conspiratorial").get<bool>();
  return v;
}

void CheckVote(const VoteRecord& v) {
  if (v.item_id.empty() || v.annotator_id.empty() || v.best.empty() ||
      v.worst.empty()) {
    throw Error(ErrorCode::kInvalidRecord, kModule, "vote has an empty field");
  }
  if (v.best == v.worst) {
    throw Error(ErrorCode::kInvalidRecord, kModule,
                fmt::format("vote on {} by {}: best and worst are both {}",
                            v.item_id, v.annotator_id, v.best));
  }
}

namespace {

template <typename T, typename Fn>
std::vector<T> ReadJsonl(const std::filesystem::path& path, Fn parse) {
  std::vector<T> out;
  const std::vector<std::string> lines = SplitLines(ReadFile(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(lines[i])));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, kModule,
                  fmt::format("{}:{}: {}", path.string(), i + 1, e.what()));
    } catch (const Error& e) {
      throw Error(e.code(), kModule,
                  fmt::format("{}:{}: {}", path.string(), i + 1, e.what()));
    }
  }
  return out;
}

}  // namespace

std::vector<VoteRecord> ReadVotes(const std::filesystem::path& path) {
  return ReadJsonl<VoteRecord>(path, [](const json& j) {
    VoteRecord v = VoteFromJson(j);
    CheckVote(v);
    return v;
  });
}

std::vector<JudgmentRecord> ReadJudgments(const std::filesystem::path& path) {
  return ReadJsonl<JudgmentRecord>(path, JudgmentFromJson);
}

namespace {

// Candidates considered shown on each voted item.
ItemCandidates ShownCandidates(std::span<const VoteRecord> votes,
                               const ItemCandidates& items) {
  ItemCandidates shown;
  for (const VoteRecord& v : votes) {
    if (shown.count(v.item_id)) continue;
    auto it = items.find(v.item_id);
    if (it != items.end()) shown[v.item_id] = it->second;
  }
  if (!items.empty()) {
    for (const VoteRecord& v : votes) {
      if (!items.count(v.item_id)) {
        throw Error(ErrorCode::kUnknownCandidate, kModule,
                    fmt::format("vote for unknown item '{}'", v.item_id));
      }
    }
    return shown;
  }
  std::map<std::string, std::set<std::string>> seen;
  for (const VoteRecord& v : votes) {
    seen[v.item_id].insert(v.best);
    seen[v.item_id].insert(v.worst);
  }
  for (auto& [item, set] : seen) shown[item].assign(set.begin(), set.end());
  return shown;
}

}  // namespace

std::map<std::string, double> BestWorstScores(std::span<const VoteRecord> votes,
                                              const ItemCandidates& items) {
  const ItemCandidates shown = ShownCandidates(votes, items);
  std::map<std::string, long long> net;
  std::map<std::string, std::size_t> den;
  for (const auto& [item, cands] : shown) {
    for (const std::string& c : cands) net.emplace(c, 0);
  }
  for (const VoteRecord& v : votes) {
    const std::vector<std::string>& cands = shown.at(v.item_id);
    for (const std::string& c : std::set<std::string>(cands.begin(), cands.end())) {
      ++den[c];
    }
    if (std::find(cands.begin(), cands.end(), v.best) == cands.end() ||
        std::find(cands.begin(), cands.end(), v.worst) == cands.end()) {
      throw Error(ErrorCode::kUnknownCandidate, kModule,
                  fmt::format("vote on {} names a candidate not shown there",
                              v.item_id));
    }
    ++net[v.best];
    --net[v.worst];
  }
  std::map<std::string, double> out;
  for (const auto& [c, n] : net) {
    const std::size_t d = den[c];
    out[c] = d == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d);
  }
  return out;
}

namespace {

const std::string& PlayerOf(const std::map<std::string, std::string>& cp,
                            const std::string& candidate) {
  auto it = cp.find(candidate);
  if (it == cp.end()) {
    throw Error(ErrorCode::kUnknownCandidate, kModule,
                fmt::format("candidate '{}' has no player mapping", candidate));
  }
  return it->second;
}

}  // namespace

std::map<std::string, double> BestWorstByPlayer(
    std::span<const VoteRecord> votes,
    const std::map<std::string, std::string>& candidate_player,
    const ItemCandidates& items) {
  const ItemCandidates shown = ShownCandidates(votes, items);
  std::map<std::string, long long> net;
  std::map<std::string, std::size_t> den;
  for (const auto& [c, p] : candidate_player) net.emplace(p, 0);
  for (const VoteRecord& v : votes) {
    std::set<std::string> players;
    for (const std::string& c : shown.at(v.item_id)) {
      players.insert(PlayerOf(candidate_player, c));
    }
    for (const std::string& p : players) ++den[p];
    ++net[PlayerOf(candidate_player, v.best)];
    --net[PlayerOf(candidate_player, v.worst)];
  }
  std::map<std::string, double> out;
  for (const auto& [p, n] : net) {
    const std::size_t d = den[p];
    out[p] = d == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Games

std::string_view OutcomeName(Outcome o) {
  switch (o) {
    case Outcome::kAWins: return "A_WINS";
    case Outcome::kBWins: return "B_WINS";
    case Outcome::kDraw: return "DRAW";
  }
  return "?";
}

Outcome ParseOutcome(std::string_view name) {
  if (name == "A_WINS") return Outcome::kAWins;
  if (name == "B_WINS") return Outcome::kBWins;
  if (name == "DRAW") return Outcome::kDraw;
  throw Error(ErrorCode::kInvalidRecord, kModule,
              fmt::format("unknown outcome '{}'", name));
}

Outcome Flip(Outcome o) {
  if (o == Outcome::kAWins) return Outcome::kBWins;
  if (o == Outcome::kBWins) return Outcome::kAWins;
  return Outcome::kDraw;
}

ordered_json ToJson(const GameRecord& g) {
  return {{"item_id", g.item_id},
          {"player_a", g.player_a},
          {"player_b", g.player_b},
          {"outcome", OutcomeName(g.outcome)}};
}

GameRecord GameFromJson(const json& j) {
  GameRecord g;
  g.item_id = j.at("item_id").get<std::string>();
  g.player_a = j.at("player_a").get<std::string>();
  g.player_b = j.at("player_b").get<std::string>();
  g.outcome = ParseOutcome(j.at("outcome").get<std::string>());
  if (g.player_a == g.player_b) {
    throw Error(ErrorCode::kInvalidRecord, kModule,
                fmt::format("game {} has the same player on both sides",
                            g.item_id));
  }
  return g;
}

std::vector<GameRecord> VotesToGames(
    std::span<const VoteRecord> votes,
    const std::map<std::string, std::string>& candidate_player,
    const std::string& player_a, const std::string& player_b,
    GameRule rule) {
  if (player_a == player_b) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "players must differ");
  }
  std::vector<GameRecord> games;
  // item -> (favoring A, favoring B, touched)
  std::map<std::string, std::tuple<std::size_t, std::size_t, bool>> tally;
  for (const VoteRecord& v : votes) {
    const std::string& best = PlayerOf(candidate_player, v.best);
    const std::string& worst = PlayerOf(candidate_player, v.worst);
    const bool fav_a = best == player_a || worst == player_b;
    const bool fav_b = best == player_b || worst == player_a;
    const bool touched = best == player_a || best == player_b ||
                         worst == player_a || worst == player_b;
    if (!touched) continue;
    if (rule == GameRule::kPerVote) {
      Outcome o = Outcome::kDraw;
      if (fav_a && !fav_b) o = Outcome::kAWins;
      if (fav_b && !fav_a) o = Outcome::kBWins;
      games.push_back({v.item_id, player_a, player_b, o});
      continue;
    }
    auto& [a, b, t] = tally[v.item_id];
    if (fav_a && !fav_b) ++a;
    if (fav_b && !fav_a) ++b;
    t = true;
  }
  for (const auto& [item, counts] : tally) {
    const auto [a, b, t] = counts;
    Outcome o = Outcome::kDraw;
    if (a > b) o = Outcome::kAWins;
    if (b > a) o = Outcome::kBWins;
    games.push_back({item, player_a, player_b, o});
  }
  return games;
}

std::vector<GameRecord> JudgmentsToGames(
    std::span<const JudgmentRecord> judgments,
    std::span<const ModelPrediction> preds_a,
    std::span<const ModelPrediction> preds_b, const std::string& player_a,
    const std::string& player_b) {
  if (player_a == player_b) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "players must differ");
  }
  std::map<std::string, std::pair<std::size_t, std::size_t>> votes;  // yes, no
  for (const JudgmentRecord& j : judgments) {
    auto& [yes, no] = votes[j.item_id];
    (j.is_conspiratorial ? yes : no)++;
  }
  std::map<std::string, bool> a, b;
  for (const ModelPrediction& p : preds_a) a[p.message_id] = p.is_conspiratorial;
  for (const ModelPrediction& p : preds_b) b[p.message_id] = p.is_conspiratorial;
  std::vector<GameRecord> games;
  for (const auto& [item, yn] : votes) {
    auto ia = a.find(item);
    auto ib = b.find(item);
    if (ia == a.end() || ib == b.end()) continue;
    Outcome o = Outcome::kDraw;
    if (yn.first != yn.second) {
      const bool ref = yn.first > yn.second;
      const bool ok_a = ia->second == ref;
      const bool ok_b = ib->second == ref;
      if (ok_a && !ok_b) o = Outcome::kAWins;
      if (ok_b && !ok_a) o = Outcome::kBWins;
    }
    games.push_back({item, player_a, player_b, o});
  }
  return games;
}

// ---------------------------------------------------------------------------
// ELO

std::pair<double, double> EloUpdate(double ra, double rb, Outcome outcome,
                                    double k) {
  if (!(k > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "K must be positive");
  }
  const double ea = 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
  const double eb = 1.0 / (1.0 + std::pow(10.0, (ra - rb) / 400.0));
  double sa = 0.5;
  if (outcome == Outcome::kAWins) sa = 1.0;
  if (outcome == Outcome::kBWins) sa = 0.0;
  return {ra + k * (sa - ea), rb + k * ((1.0 - sa) - eb)};
}

std::map<std::string, double> RunTournament(std::span<const GameRecord> games,
                                            std::uint64_t order_seed,
                                            double k) {
  if (games.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "a tournament needs at least one game");
  }
  // Shuffling indices gives the same permutation as shuffling the records.
  std::vector<std::size_t> order(games.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 gen(order_seed);
  SeededShuffle(std::span<std::size_t>(order), gen);
  std::map<std::string, double> ratings;
  std::vector<std::pair<double*, double*>> slots(games.size());
  for (const GameRecord& g : games) {
    ratings.emplace(g.player_a, kInitialRating);
    ratings.emplace(g.player_b, kInitialRating);
  }
  for (std::size_t i = 0; i < games.size(); ++i) {
    slots[i] = {&ratings[games[i].player_a], &ratings[games[i].player_b]};
  }
  for (std::size_t i : order) {
    double& ra = *slots[i].first;
    double& rb = *slots[i].second;
    std::tie(ra, rb) = EloUpdate(ra, rb, games[i].outcome, k);
  }
  return ratings;
}

TournamentResult RepeatedTournament(std::span<const GameRecord> games,
                                    std::size_t repetitions,
                                    std::uint64_t base_seed, double k,
                                    std::size_t threads) {
  if (games.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "a tournament needs at least one game");
  }
  if (!(k > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "K must be positive");
  }
  std::vector<std::map<std::string, double>> finals(repetitions);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(repetitions, 1));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < repetitions; i += threads) {
          finals[i] = RunTournament(games, DeriveSeed(base_seed, i), k);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  TournamentResult r;
  r.repetitions = repetitions;
  r.k = k;
  r.base_seed = base_seed;
  for (const GameRecord& g : games) {
    r.win_counts.emplace(g.player_a, 0);
    r.win_counts.emplace(g.player_b, 0);
    r.mean_final_ratings.emplace(g.player_a, 0.0);
    r.mean_final_ratings.emplace(g.player_b, 0.0);
  }
  for (const auto& ratings : finals) {
    std::string winner;
    double top = -std::numeric_limits<double>::infinity();
    bool unique = false;
    for (const auto& [player, rating] : ratings) {
      if (rating > top) {
        top = rating;
        winner = player;
        unique = true;
      } else if (rating == top) {
        unique = false;
      }
      r.mean_final_ratings[player] += rating;
    }
    if (unique) {
      ++r.win_counts[winner];
      r.winner_log.push_back(winner);
    } else {
      ++r.tie_count;
      r.winner_log.emplace_back();
    }
  }
  if (repetitions > 0) {
    for (auto& [player, sum] : r.mean_final_ratings) {
      sum /= static_cast<double>(repetitions);
    }
  }
  return r;
}

ordered_json ToJson(const TournamentResult& r) {
  ordered_json wins = ordered_json::object();
  for (const auto& [p, n] : r.win_counts) wins[p] = n;
  ordered_json means = ordered_json::object();
  for (const auto& [p, v] : r.mean_final_ratings) means[p] = v;
  return {{"win_counts", std::move(wins)},
          {"tie_count", r.tie_count},
          {"repetitions", r.repetitions},
          {"K", r.k},
          {"base_seed", r.base_seed},
          {"mean_final_ratings", std::move(means)}};
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string MetricsCsv(std::span<const MetricRow> rows) {
  std::string out = "model,strategy,label,metric,value\n";
  for (const MetricRow& r : rows) {
    out += fmt::format("{},{},{},{},{:.6f}\n", CsvField(r.model),
                       CsvField(r.strategy), CsvField(r.label),
                       CsvField(r.metric), r.value);
  }
  return out;
}

}  // namespace confra
