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

// FrameNet lexical-unit index, the table-driven lemmatizer, the
// most-frequent-tag POS lexicon and the light/copular/modal verb stoplist.

#ifndef CONFRA_LEXICON_H_
#define CONFRA_LEXICON_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace confra {

enum class CoarsePos { kVerb, kNoun, kAdj, kOther };

std::string_view CoarsePosName(CoarsePos pos);
CoarsePos ParseCoarsePos(std::string_view name);

// FrameNet POS -> coarse: v->VERB, n->NOUN, a->ADJ, everything else OTHER.
CoarsePos CoarseFromFrameNet(std::string_view fn_pos);

struct LexicalUnit {
  std::string lemma;  // lowercase; may contain spaces (multi-word LU)
  std::string pos;    // FrameNet POS tag: v, n, a, adv, prep, ...
  std::string frame_name;
  int lu_id = 0;

  bool is_multiword() const {
    return lemma.find(' ') != std::string::npos;
  }
  friend bool operator==(const LexicalUnit&, const LexicalUnit&) = default;
};

class FrameIndex {
 public:
  FrameIndex() = default;

  // Throws Error(kLoadError) on duplicate (lemma, pos, frame) or an LU whose
  // frame is not in `frames` (when `frames` is non-empty).
  FrameIndex(std::vector<LexicalUnit> units, std::set<std::string> frames);

  // Case-insensitive; empty when unknown.
  const std::vector<LexicalUnit>& Lookup(std::string_view lemma) const;

  const std::set<std::string>& frames() const { return frames_; }
  std::size_t size() const { return size_; }

  // Multi-word LUs keyed by their first word, longest first.
  const std::vector<LexicalUnit>& MultiwordStartingWith(
      std::string_view first_word) const;

  // Warnings produced while loading (e.g. unexpected release version).
  const std::vector<std::string>& warnings() const { return warnings_; }
  void AddWarning(std::string w) { warnings_.push_back(std::move(w)); }

  friend bool operator==(const FrameIndex& a, const FrameIndex& b) {
    return a.by_lemma_ == b.by_lemma_ && a.frames_ == b.frames_;
  }

 private:
  std::map<std::string, std::vector<LexicalUnit>> by_lemma_;
  std::map<std::string, std::vector<LexicalUnit>> multiword_by_first_;
  std::set<std::string> frames_;
  std::size_t size_ = 0;
  std::vector<std::string> warnings_;
};

// Loads a FrameNet release directory: luIndex.xml (required) and
// frameIndex.xml (optional; frame names otherwise come from the LUs).
// A release that does not identify as 1.7 adds a warning.
FrameIndex LoadFrameNet(const std::filesystem::path& root);

// Builds an index from luIndex-style XML text. Used by LoadFrameNet and
// handy for fixtures.
FrameIndex ParseLuIndex(std::string_view lu_index_xml,
                        std::string_view frame_index_xml = {});

struct SuffixRule {
  std::string suffix;
  std::string replacement;
  std::size_t min_stem = 2;  // characters that must remain before the suffix
};

// Exceptions win over rules. A suffix rule (which must strictly shorten the
// word) is applied once, and only kept when its output is a fixed point of
// the tables; exception targets are pinned as fixed points on load. Together
// these make Lemmatize(Lemmatize(x)) == Lemmatize(x).
class Lemmatizer {
 public:
  Lemmatizer() = default;

  // Throws Error(kConfigError) if a rule does not strictly shorten.
  Lemmatizer(std::map<std::pair<std::string, CoarsePos>, std::string> exceptions,
             std::map<CoarsePos, std::vector<SuffixRule>> rules);

  // lemmatizer-tables.json:
  // {"exceptions": {"VERB": {"is": "be", ...}, ...},
  //  "suffix_rules": [{"pos": "VERB", "suffix": "ing", "replacement": "",
  //                    "min_stem": 3}, ...]}
  static Lemmatizer FromJson(std::string_view json_text);
  static Lemmatizer Load(const std::filesystem::path& path);

  // Lowercases; VERB/NOUN/ADJ use their tables, OTHER only lowercases.
  std::string Lemmatize(std::string_view surface, CoarsePos pos) const;

  // Single rewrite step (exception or first matching rule); nullopt when
  // the word is stable.
  std::optional<std::string> Step(const std::string& word, CoarsePos pos) const;

  const auto& exceptions() const { return exceptions_; }
  const auto& rules() const { return rules_; }

  std::string ToJson() const;

 private:
  std::map<std::pair<std::string, CoarsePos>, std::string> exceptions_;
  std::map<CoarsePos, std::vector<SuffixRule>> rules_;
};

// Most-frequent-tag lexicon; unknown tokens and function words are OTHER.
class PosTagger {
 public:
  PosTagger() = default;
  explicit PosTagger(std::unordered_map<std::string, CoarsePos> lexicon)
      : lexicon_(std::move(lexicon)) {}

  // Tab-separated "surface<TAB>VERB|NOUN|ADJ" lines; '#' starts a comment.
  static PosTagger Load(const std::filesystem::path& path);

  CoarsePos Tag(std::string_view token) const;
  std::vector<CoarsePos> TagAll(const std::vector<std::string>& tokens) const;

  std::size_t size() const { return lexicon_.size(); }

 private:
  std::unordered_map<std::string, CoarsePos> lexicon_;
};

// {be, try, have, do, make, get, must, should, can, may, might, want}
const std::set<std::string>& StopVerbs();
bool IsStopVerb(std::string_view lemma);

// Resolves the data directory holding lemmatizer-tables.json and
// pos-lexicon.tsv: explicit argument, then $CONFRA_DATA_DIR, then the
// compiled-in install/source location.
std::filesystem::path DataDir(const std::filesystem::path& override_dir = {});

// Lemmatizer, tagger and stoplist bundled for the frame mapper.
struct LexicalTools {
  Lemmatizer lemmatizer;
  PosTagger tagger;

  static LexicalTools LoadDefault(const std::filesystem::path& data_dir = {});
};

}  // namespace confra

#endif  // CONFRA_LEXICON_H_
