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

#include "confra/framemap.h"

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <utility>

#include "confra/error.h"
#include "confra/text.h"

namespace confra {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json ToJson(const FrameAssignment& a) {
  ordered_json j;
  j["message_id"] = a.message_id;
  j["span_index"] = a.span_index;
  j["label"] = LabelName(a.label);
  j["surface"] = a.surface;
  j["lemma"] = a.lemma;
  j["lu"] = {{"lemma", a.lu.lemma},
             {"pos", a.lu.pos},
             {"frame_name", a.lu.frame_name},
             {"lu_id", a.lu.lu_id}};
  j["frame_name"] = a.frame_name;
  j["multiword"] = a.multiword;
  return j;
}

FrameAssignment AssignmentFromJson(const json& j) {
  FrameAssignment a;
  a.message_id = j.at("message_id").get<std::string>();
  a.span_index = j.at("span_index").get<std::size_t>();
  a.label = ParseLabel(j.at("label").get<std::string>());
  a.surface = j.at("surface").get<std::string>();
  a.lemma = j.at("lemma").get<std::string>();
  const json& lu = j.at("lu");
  a.lu.lemma = lu.at("lemma").get<std::string>();
  a.lu.pos = lu.at("pos").get<std::string>();
  a.lu.frame_name = lu.at("frame_name").get<std::string>();
  a.lu.lu_id = lu.value("lu_id", 0);
  a.frame_name = j.at("frame_name").get<std::string>();
  a.multiword = j.value("multiword", false);
  return a;
}

// ---------------------------------------------------------------------------
// Mapping

namespace {

bool IsContent(CoarsePos pos) { return pos != CoarsePos::kOther; }

std::vector<std::string> SplitWords(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Shared tail of both mapping entry points; `tokens` are word tokens only.
std::vector<FrameAssignment> MapTokens(const Span& span,
                                       std::size_t span_index,
                                       const std::string& message_id,
                                       const std::vector<PretaggedToken>& tokens,
                                       const FrameIndex& index) {
  std::vector<FrameAssignment> out;
  if (!IsCore(span.label)) return out;

  auto emit = [&](const std::string& surface, const std::string& lemma,
                  const LexicalUnit& lu, bool multiword) {
    FrameAssignment a;
    a.message_id = message_id;
    a.span_index = span_index;
    a.label = span.label;
    a.surface = surface;
    a.lemma = lemma;
    a.lu = lu;
    a.frame_name = lu.frame_name;
    a.multiword = multiword;
    out.push_back(std::move(a));
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const PretaggedToken& tok = tokens[i];
    if (IsContent(tok.pos) && !IsStopVerb(tok.lemma)) {
      for (const LexicalUnit& lu : index.Lookup(tok.lemma)) {
        if (lu.is_multiword()) continue;
        if (CoarseFromFrameNet(lu.pos) != tok.pos) continue;
        emit(tok.surface, tok.lemma, lu, false);
      }
    }
    // Multi-word LUs: every word must match the lemma (or lowercased
    // surface) in sequence, and one covered token must carry the LU's POS.
    for (const LexicalUnit& lu : index.MultiwordStartingWith(tok.lemma)) {
      const CoarsePos lu_pos = CoarseFromFrameNet(lu.pos);
      if (!IsContent(lu_pos)) continue;
      const std::vector<std::string> words = SplitWords(lu.lemma);
      if (i + words.size() > tokens.size()) continue;
      bool match = true;
      bool pos_ok = false;
      std::string surface;
      for (std::size_t k = 0; k < words.size() && match; ++k) {
        const PretaggedToken& t = tokens[i + k];
        match = words[k] == t.lemma || words[k] == AsciiLower(t.surface);
        pos_ok = pos_ok || t.pos == lu_pos;
        if (k > 0) surface += ' ';
        surface += t.surface;
      }
      if (match && pos_ok) emit(surface, lu.lemma, lu, true);
    }
  }
  return out;
}

}  // namespace

std::vector<FrameAssignment> MapSpanToFrames(const Span& span,
                                             std::size_t span_index,
                                             const Message& msg,
                                             const FrameIndex& index,
                                             const LexicalTools& tools) {
  if (!IsCore(span.label)) return {};
  // Tag the whole message so the contextual rules see the words around the
  // span; fall back to the span text when the offsets do not line up.
  const bool aligned =
      span.end > span.start &&
      (span.text.empty() ||
       Utf8Substr(msg.text, span.start, span.end) == span.text);
  const std::string text = aligned ? msg.text : span.text;
  std::vector<Token> words;
  for (Token& t : Tokenize(text)) {
    if (t.is_word) words.push_back(std::move(t));
  }
  std::vector<std::string> surfaces;
  surfaces.reserve(words.size());
  for (const Token& t : words) surfaces.push_back(t.text);
  const std::vector<CoarsePos> tags = tools.tagger.TagAll(surfaces);
  std::vector<PretaggedToken> tokens;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (aligned && (words[i].start < span.start || words[i].end > span.end)) {
      continue;
    }
    PretaggedToken pt;
    pt.surface = words[i].text;
    pt.pos = tags[i];
    pt.lemma = tools.lemmatizer.Lemmatize(pt.surface, pt.pos);
    tokens.push_back(std::move(pt));
  }
  return MapTokens(span, span_index, msg.id, tokens, index);
}

std::vector<FrameAssignment> MapPretaggedSpan(
    const Span& span, std::size_t span_index, const std::string& message_id,
    const std::vector<PretaggedToken>& tokens, const FrameIndex& index) {
  std::vector<PretaggedToken> normalized = tokens;
  for (PretaggedToken& t : normalized) t.lemma = AsciiLower(t.lemma);
  return MapTokens(span, span_index, message_id, normalized, index);
}

// ---------------------------------------------------------------------------
// Distributions

void FrameDistribution::Merge(const FrameDistribution& other) {
  for (const auto& [frame, count] : other.counts) counts[frame] += count;
  total += other.total;
}

FrameDistribution BuildDistribution(
    std::span<const FrameAssignment> assignments) {
  FrameDistribution dist;
  for (const FrameAssignment& a : assignments) ++dist.counts[a.frame_name];
  dist.total = assignments.size();
  return dist;
}

std::vector<std::size_t> FrameCounts(const FrameDistribution& dist) {
  std::vector<std::size_t> out;
  out.reserve(dist.counts.size());
  for (const auto& [frame, count] : dist.counts) out.push_back(count);
  return out;
}

// ---------------------------------------------------------------------------
// Power law

namespace {

double HurwitzZeta(double s, double q) {
  // GSL's default handler aborts; every status is checked here instead.
  static std::once_flag quiet;
  std::call_once(quiet, [] { gsl_set_error_handler_off(); });
  gsl_sf_result result;
  const int status = gsl_sf_hzeta_e(s, q, &result);
  if (status != GSL_SUCCESS) return 0.0;  // underflow for very large s
  return result.val;
}

double ApproxAlpha(std::span<const std::size_t> tail, std::size_t xmin) {
  const double shift = static_cast<double>(xmin) - 0.5;
  double sum = 0.0;
  for (std::size_t x : tail) sum += std::log(static_cast<double>(x) / shift);
  return 1.0 + static_cast<double>(tail.size()) / sum;
}

// Golden-section maximization of the concave discrete log-likelihood.
double ExactAlpha(std::span<const std::size_t> tail, std::size_t xmin) {
  double sum_log = 0.0;
  for (std::size_t x : tail) sum_log += std::log(static_cast<double>(x));
  const double n = static_cast<double>(tail.size());
  const double q = static_cast<double>(xmin);
  auto loglik = [&](double a) {
    const double z = HurwitzZeta(a, q);
    if (z <= 0.0) return -std::numeric_limits<double>::infinity();
    return -n * std::log(z) - a * sum_log;
  };
  double lo = 1.0 + 1e-6;
  double hi = 200.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - phi * (hi - lo);
  double d = lo + phi * (hi - lo);
  double fc = loglik(c);
  double fd = loglik(d);
  while (hi - lo > 1e-10) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = loglik(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = loglik(d);
    }
  }
  return (lo + hi) / 2.0;
}

}  // namespace

double PowerLawCdf(const PowerLawFit& fit, std::size_t x,
                   PowerLawMethod method) {
  if (x < fit.xmin) return 0.0;
  if (method == PowerLawMethod::kExactZeta) {
    const double denom = HurwitzZeta(fit.alpha, static_cast<double>(fit.xmin));
    if (denom <= 0.0) return 1.0;
    return 1.0 - HurwitzZeta(fit.alpha, static_cast<double>(x) + 1.0) / denom;
  }
  // P(X >= y) ~ ((y - 0.5) / (xmin - 0.5))^(1 - alpha), at y = x + 1.
  const double ratio = (static_cast<double>(x) + 0.5) /
                       (static_cast<double>(fit.xmin) - 0.5);
  return 1.0 - std::pow(ratio, 1.0 - fit.alpha);
}

PowerLawFit FitDiscretePowerLaw(std::span<const std::size_t> values,
                                PowerLawMethod method) {
  std::vector<std::size_t> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty() && sorted.front() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "framemap",
                "power-law fit needs values >= 1");
  }
  std::vector<std::size_t> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    throw Error(ErrorCode::kDegenerate, "framemap",
                fmt::format("power-law fit undefined for {} distinct value(s)",
                            distinct.size()));
  }
  PowerLawFit best;
  bool have_best = false;
  for (std::size_t xmin : distinct) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), xmin);
    const std::span<const std::size_t> tail(&*first,
                                            static_cast<std::size_t>(sorted.end() - first));
    // The zeta likelihood of a one-value tail grows without bound in alpha.
    if (method == PowerLawMethod::kExactZeta && tail.front() == tail.back()) {
      continue;
    }
    PowerLawFit fit;
    fit.xmin = xmin;
    fit.n_tail = tail.size();
    fit.alpha = method == PowerLawMethod::kExactZeta ? ExactAlpha(tail, xmin)
                                                     : ApproxAlpha(tail, xmin);
    // KS distance at each distinct tail value; `tail` is sorted.
    double ks = 0.0;
    const double n = static_cast<double>(tail.size());
    for (std::size_t i = 0; i < tail.size(); ++i) {
      if (i + 1 < tail.size() && tail[i + 1] == tail[i]) continue;
      const double empirical = static_cast<double>(i + 1) / n;
      ks = std::max(ks, std::fabs(empirical - PowerLawCdf(fit, tail[i], method)));
    }
    fit.ks_statistic = ks;
    if (!have_best || fit.ks_statistic < best.ks_statistic) {
      best = fit;
      have_best = true;
    }
  }
  return best;
}

std::optional<PowerLawFit> TryFitDiscretePowerLaw(
    std::span<const std::size_t> values, PowerLawMethod method) {
  try {
    return FitDiscretePowerLaw(values, method);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerate) return std::nullopt;
    throw;
  }
}

FrameDistribution FilterTail(const FrameDistribution& dist,
                             const std::optional<PowerLawFit>& fit) {
  if (!fit) return dist;
  FrameDistribution out;
  for (const auto& [frame, count] : dist.counts) {
    if (count >= fit->xmin) {
      out.counts.emplace(frame, count);
      out.total += count;
    }
  }
  return out;
}

FrameDistribution FilterGeneralFrames(
    const FrameDistribution& dist,
    std::span<const FrameAssignment> assignments, std::size_t total_spans,
    double max_df) {
  if (total_spans == 0) return dist;
  std::map<std::string, std::set<std::pair<std::string, std::size_t>>> spans;
  for (const FrameAssignment& a : assignments) {
    spans[a.frame_name].emplace(a.message_id, a.span_index);
  }
  FrameDistribution out;
  for (const auto& [frame, count] : dist.counts) {
    auto it = spans.find(frame);
    const double df =
        it == spans.end() ? 0.0
                          : static_cast<double>(it->second.size()) /
                                static_cast<double>(total_spans);
    if (df <= max_df) {
      out.counts.emplace(frame, count);
      out.total += count;
    }
  }
  return out;
}

namespace {

template <typename Map>
std::vector<std::pair<std::string, std::size_t>> RankCounts(const Map& counts) {
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

}  // namespace

std::vector<FrameRank> TopFramesPerLabel(
    std::span<const FrameAssignment> assignments, SpanLabel label,
    std::size_t k) {
  if (k == 0) {
    throw Error(ErrorCode::kInvalidArgument, "framemap", "k must be >= 1");
  }
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::map<std::string, std::size_t>> lemmas;
  for (const FrameAssignment& a : assignments) {
    if (a.label != label) continue;
    ++counts[a.frame_name];
    ++lemmas[a.frame_name][a.lemma];
  }
  std::vector<FrameRank> out;
  for (const auto& [frame, count] : RankCounts(counts)) {
    if (out.size() == k) break;
    FrameRank rank{frame, count, {}};
    for (const auto& [lemma, n] : RankCounts(lemmas[frame])) {
      if (rank.lemmas.size() == 5) break;
      rank.lemmas.push_back(lemma);
    }
    out.push_back(std::move(rank));
  }
  return out;
}

ordered_json DistributionToJson(const FrameDistribution& dist,
                                const std::optional<PowerLawFit>& fit) {
  ordered_json j;
  ordered_json counts = ordered_json::object();
  for (const auto& [frame, count] : dist.counts) counts[frame] = count;
  j["counts"] = std::move(counts);
  j["total"] = dist.total;
  if (fit) {
    j["fit"] = {{"alpha", fit->alpha},
                {"xmin", fit->xmin},
                {"ks", fit->ks_statistic},
                {"n_tail", fit->n_tail}};
  } else {
    j["fit"] = nullptr;
  }
  return j;
}

}  // namespace confra
