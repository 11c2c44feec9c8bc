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

// Alignment of core (plan_event / secret) spans with FrameNet frames, frame
// frequency statistics, discrete power-law fitting and tail filtering.

#ifndef CONFRA_FRAMEMAP_H_
#define CONFRA_FRAMEMAP_H_

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "confra/lexicon.h"
#include "confra/model.h"
#include "json.hpp"

namespace confra {

struct FrameAssignment {
  std::string message_id;
  std::size_t span_index = 0;
  SpanLabel label = SpanLabel::kPlanEvent;
  std::string surface;  // token text; for multi-word LUs the covered words
  std::string lemma;
  LexicalUnit lu;
  std::string frame_name;
  bool multiword = false;

  friend bool operator==(const FrameAssignment&,
                         const FrameAssignment&) = default;
};

nlohmann::ordered_json ToJson(const FrameAssignment& a);
FrameAssignment AssignmentFromJson(const nlohmann::json& j);

// Per-token lemma/POS columns supplied with an annotation file. When given,
// they replace the built-in tokenizer, tagger and lemmatizer for that span.
struct PretaggedToken {
  std::string surface;
  std::string lemma;
  CoarsePos pos = CoarsePos::kOther;
};

// Tokenize -> tag -> keep VERB/NOUN/ADJ -> lemmatize -> drop stop verbs ->
// one assignment per (token, LU with matching coarse POS). Multi-word LUs
// match only when the whole lemma sequence occurs in the span.
// Spans with a non-core label yield nothing.
std::vector<FrameAssignment> MapSpanToFrames(const Span& span,
                                             std::size_t span_index,
                                             const Message& msg,
                                             const FrameIndex& index,
                                             const LexicalTools& tools);

std::vector<FrameAssignment> MapPretaggedSpan(
    const Span& span, std::size_t span_index, const std::string& message_id,
    const std::vector<PretaggedToken>& tokens, const FrameIndex& index);

struct FrameDistribution {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;

  std::size_t unique() const { return counts.size(); }
  // Associative, commutative merge.
  void Merge(const FrameDistribution& other);
  friend bool operator==(const FrameDistribution&,
                         const FrameDistribution&) = default;
};

FrameDistribution BuildDistribution(std::span<const FrameAssignment> assignments);

struct PowerLawFit {
  double alpha = 0.0;
  std::size_t xmin = 0;
  double ks_statistic = 0.0;
  std::size_t n_tail = 0;
};

enum class PowerLawMethod {
  // alpha = 1 + n / sum(ln(x / (xmin - 0.5))), CDF from the same
  // continuous approximation.
  kApproximate,
  // Numerical MLE of the discrete (Hurwitz zeta) likelihood.
  kExactZeta,
};

// Scans every observed value as xmin and keeps the one with the smallest
// KS distance (ties: smallest xmin). Throws Error(kDegenerate) when fewer
// than two distinct values are present, and kInvalidArgument on zeros.
PowerLawFit FitDiscretePowerLaw(std::span<const std::size_t> values,
                                PowerLawMethod method = PowerLawMethod::kApproximate);

// Same, with the degenerate case mapped to nullopt.
std::optional<PowerLawFit> TryFitDiscretePowerLaw(
    std::span<const std::size_t> values,
    PowerLawMethod method = PowerLawMethod::kApproximate);

// Fitted CDF P(X <= x) for x >= xmin.
double PowerLawCdf(const PowerLawFit& fit, std::size_t x,
                   PowerLawMethod method = PowerLawMethod::kApproximate);

// Counts of the distribution as a multiset (one value per frame).
std::vector<std::size_t> FrameCounts(const FrameDistribution& dist);

// Removes frames with count < xmin. nullopt (degenerate fit) is identity.
FrameDistribution FilterTail(const FrameDistribution& dist,
                             const std::optional<PowerLawFit>& fit);

// Drops frames that occur in more than `max_df` of the distinct spans.
FrameDistribution FilterGeneralFrames(
    const FrameDistribution& dist,
    std::span<const FrameAssignment> assignments, std::size_t total_spans,
    double max_df);

struct FrameRank {
  std::string frame_name;
  std::size_t count = 0;
  std::vector<std::string> lemmas;  // up to 5 triggering lemmas

  friend bool operator==(const FrameRank&, const FrameRank&) = default;
};

// Descending count, ties by frame name; lemmas ordered the same way.
std::vector<FrameRank> TopFramesPerLabel(
    std::span<const FrameAssignment> assignments, SpanLabel label,
    std::size_t k);

// framedist.json: {"counts", "total", "fit": {"alpha","xmin","ks"}}.
nlohmann::ordered_json DistributionToJson(const FrameDistribution& dist,
                                          const std::optional<PowerLawFit>& fit);

}  // namespace confra

#endif  // CONFRA_FRAMEMAP_H_
