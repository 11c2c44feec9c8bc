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

#include "confra/lexicon.h"

#include <fmt/format.h>

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cstdlib>
#include <sstream>
#include <tuple>

#include "confra/error.h"
#include "confra/fileio.h"
#include "confra/text.h"
#include "json.hpp"

#ifndef CONFRA_DEFAULT_DATA_DIR
#define CONFRA_DEFAULT_DATA_DIR ""
#endif

namespace confra {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using nlohmann::json;

std::string_view CoarsePosName(CoarsePos pos) {
  switch (pos) {
    case CoarsePos::kVerb: return "VERB";
    case CoarsePos::kNoun: return "NOUN";
    case CoarsePos::kAdj: return "ADJ";
    case CoarsePos::kOther: return "OTHER";
  }
  return "OTHER";
}

CoarsePos ParseCoarsePos(std::string_view name) {
  if (name == "VERB") return CoarsePos::kVerb;
  if (name == "NOUN") return CoarsePos::kNoun;
  if (name == "ADJ") return CoarsePos::kAdj;
  if (name == "OTHER") return CoarsePos::kOther;
  throw Error(ErrorCode::kInvalidArgument, "lexicon",
              fmt::format("unknown coarse POS '{}'", name));
}

CoarsePos CoarseFromFrameNet(std::string_view fn_pos) {
  const std::string p = AsciiLower(fn_pos);
  if (p == "v") return CoarsePos::kVerb;
  if (p == "n") return CoarsePos::kNoun;
  if (p == "a") return CoarsePos::kAdj;
  return CoarsePos::kOther;
}

// ---------------------------------------------------------------------------
// FrameIndex

namespace {

const std::vector<LexicalUnit>& EmptyUnits() {
  static const std::vector<LexicalUnit> kEmpty;
  return kEmpty;
}

std::string FirstWord(std::string_view lemma) {
  return std::string(lemma.substr(0, lemma.find(' ')));
}

}  // namespace

FrameIndex::FrameIndex(std::vector<LexicalUnit> units,
                       std::set<std::string> frames)
    : frames_(std::move(frames)) {
  const bool check_frames = !frames_.empty();
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (LexicalUnit& lu : units) {
    lu.lemma = AsciiLower(lu.lemma);
    if (!seen.emplace(lu.lemma, lu.pos, lu.frame_name).second) {
      throw Error(ErrorCode::kLoadError, "lexicon",
                  fmt::format("duplicate lexical unit {}.{} in frame {}",
                              lu.lemma, lu.pos, lu.frame_name));
    }
    if (check_frames && !frames_.contains(lu.frame_name)) {
      throw Error(ErrorCode::kLoadError, "lexicon",
                  fmt::format("lexical unit {}.{} refers to unknown frame {}",
                              lu.lemma, lu.pos, lu.frame_name));
    }
  }
  for (LexicalUnit& lu : units) {
    frames_.insert(lu.frame_name);
    if (lu.is_multiword()) {
      multiword_by_first_[FirstWord(lu.lemma)].push_back(lu);
    }
    by_lemma_[lu.lemma].push_back(std::move(lu));
    ++size_;
  }
  auto by_id = [](const LexicalUnit& a, const LexicalUnit& b) {
    return std::tie(a.frame_name, a.pos, a.lu_id) <
           std::tie(b.frame_name, b.pos, b.lu_id);
  };
  for (auto& [lemma, list] : by_lemma_) {
    std::sort(list.begin(), list.end(), by_id);
  }
  for (auto& [first, list] : multiword_by_first_) {
    std::sort(list.begin(), list.end(),
              [&](const LexicalUnit& a, const LexicalUnit& b) {
                if (a.lemma.size() != b.lemma.size()) {
                  return a.lemma.size() > b.lemma.size();
                }
                if (a.lemma != b.lemma) return a.lemma < b.lemma;
                return by_id(a, b);
              });
  }
}

const std::vector<LexicalUnit>& FrameIndex::Lookup(std::string_view lemma) const {
  auto it = by_lemma_.find(AsciiLower(lemma));
  return it == by_lemma_.end() ? EmptyUnits() : it->second;
}

const std::vector<LexicalUnit>& FrameIndex::MultiwordStartingWith(
    std::string_view first_word) const {
  auto it = multiword_by_first_.find(AsciiLower(first_word));
  return it == multiword_by_first_.end() ? EmptyUnits() : it->second;
}

namespace {

pt::ptree ParseXml(std::string_view text, const std::string& name) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::kLoadError, "lexicon",
                fmt::format("{}: corrupt XML: {}", name, e.what()));
  }
  return tree;
}

const pt::ptree* Root(const pt::ptree& doc, const char* root_name) {
  for (const auto& [key, child] : doc) {
    if (key == root_name) return &child;
  }
  return nullptr;
}

}  // namespace

FrameIndex ParseLuIndex(std::string_view lu_index_xml,
                        std::string_view frame_index_xml) {
  const pt::ptree doc = ParseXml(lu_index_xml, "luIndex.xml");
  const pt::ptree* root = Root(doc, "luIndex");
  if (root == nullptr) {
    throw Error(ErrorCode::kLoadError, "lexicon",
                "luIndex.xml: missing <luIndex> root");
  }
  std::vector<LexicalUnit> units;
  for (const auto& [key, node] : *root) {
    if (key != "lu") continue;
    const std::string name = node.get<std::string>("<xmlattr>.name", "");
    const std::size_t dot = name.rfind('.');
    if (dot == std::string::npos || dot == 0) {
      throw Error(ErrorCode::kLoadError, "lexicon",
                  fmt::format("luIndex.xml: malformed LU name '{}'", name));
    }
    LexicalUnit lu;
    lu.lemma = name.substr(0, dot);
    lu.pos = AsciiLower(name.substr(dot + 1));
    lu.frame_name = node.get<std::string>("<xmlattr>.frameName", "");
    lu.lu_id = node.get<int>("<xmlattr>.ID", 0);
    if (lu.frame_name.empty()) {
      throw Error(ErrorCode::kLoadError, "lexicon",
                  fmt::format("luIndex.xml: LU '{}' has no frameName", name));
    }
    units.push_back(std::move(lu));
  }
  std::set<std::string> frames;
  if (!frame_index_xml.empty()) {
    const pt::ptree fdoc = ParseXml(frame_index_xml, "frameIndex.xml");
    const pt::ptree* froot = Root(fdoc, "frameIndex");
    if (froot == nullptr) {
      throw Error(ErrorCode::kLoadError, "lexicon",
                  "frameIndex.xml: missing <frameIndex> root");
    }
    for (const auto& [key, node] : *froot) {
      if (key == "frame") frames.insert(node.get<std::string>("<xmlattr>.name"));
    }
  }
  return FrameIndex(std::move(units), std::move(frames));
}

FrameIndex LoadFrameNet(const fs::path& root) {
  const fs::path lu_path = root / "luIndex.xml";
  if (!fs::exists(lu_path)) {
    throw Error(ErrorCode::kLoadError, "lexicon",
                fmt::format("{}: missing", lu_path.string()));
  }
  const fs::path frame_path = root / "frameIndex.xml";
  const std::string frame_xml =
      fs::exists(frame_path) ? ReadFile(frame_path) : std::string();
  FrameIndex index;
  try {
    index = ParseLuIndex(ReadFile(lu_path), frame_xml);
  } catch (const Error& e) {
    throw Error(e.code(), e.module(),
                fmt::format("{} ({})", e.what(), root.string()));
  }
  // Releases do not carry a version attribute; look for it in the
  // directory name or the top-level README.
  bool is_17 = root.lexically_normal().string().find("1.7") != std::string::npos;
  for (const char* readme : {"README.txt", "README", "README.md"}) {
    if (!is_17 && fs::exists(root / readme)) {
      is_17 = ReadFile(root / readme).find("1.7") != std::string::npos;
    }
  }
  if (!is_17) {
    index.AddWarning(fmt::format(
        "{}: could not confirm FrameNet release 1.7", root.string()));
  }
  return index;
}

// ---------------------------------------------------------------------------
// Lemmatizer

Lemmatizer::Lemmatizer(
    std::map<std::pair<std::string, CoarsePos>, std::string> exceptions,
    std::map<CoarsePos, std::vector<SuffixRule>> rules)
    : exceptions_(std::move(exceptions)), rules_(std::move(rules)) {
  for (const auto& [pos, list] : rules_) {
    for (const SuffixRule& r : list) {
      if (r.replacement.size() >= r.suffix.size()) {
        throw Error(ErrorCode::kConfigError, "lexicon",
                    fmt::format("suffix rule -{} -> -{} does not shorten",
                                r.suffix, r.replacement));
      }
    }
  }
  // Exception targets are final: collapse chains (a -> b -> c becomes
  // a -> c) and pin targets that a suffix rule would otherwise rewrite.
  for (auto& [key, target] : exceptions_) {
    for (std::size_t hops = 0; hops < exceptions_.size(); ++hops) {
      auto it = exceptions_.find({target, key.second});
      if (it == exceptions_.end() || it->second == target) break;
      target = it->second;
    }
  }
  std::vector<std::pair<std::string, CoarsePos>> pins;
  for (const auto& [key, target] : exceptions_) {
    if (!exceptions_.contains({target, key.second}) &&
        Step(target, key.second)) {
      pins.emplace_back(target, key.second);
    }
  }
  for (auto& pin : pins) exceptions_[pin] = pin.first;
}

Lemmatizer Lemmatizer::FromJson(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kLoadError, "lexicon",
                fmt::format("lemmatizer tables: {}", e.what()));
  }
  std::map<std::pair<std::string, CoarsePos>, std::string> exceptions;
  for (const auto& [pos_name, table] : j.at("exceptions").items()) {
    const CoarsePos pos = ParseCoarsePos(pos_name);
    for (const auto& [surface, lemma] : table.items()) {
      exceptions[{surface, pos}] = lemma.get<std::string>();
    }
  }
  std::map<CoarsePos, std::vector<SuffixRule>> rules;
  for (const json& r : j.at("suffix_rules")) {
    rules[ParseCoarsePos(r.at("pos").get<std::string>())].push_back(
        SuffixRule{r.at("suffix").get<std::string>(),
                   r.at("replacement").get<std::string>(),
                   r.value("min_stem", std::size_t{2})});
  }
  return Lemmatizer(std::move(exceptions), std::move(rules));
}

Lemmatizer Lemmatizer::Load(const fs::path& path) {
  return FromJson(ReadFile(path));
}

std::optional<std::string> Lemmatizer::Step(const std::string& word,
                                            CoarsePos pos) const {
  if (auto it = exceptions_.find({word, pos}); it != exceptions_.end()) {
    if (it->second == word) return std::nullopt;
    return it->second;
  }
  auto rit = rules_.find(pos);
  if (rit == rules_.end()) return std::nullopt;
  for (const SuffixRule& r : rit->second) {
    if (word.size() >= r.suffix.size() + r.min_stem &&
        word.ends_with(r.suffix)) {
      return word.substr(0, word.size() - r.suffix.size()) + r.replacement;
    }
  }
  return std::nullopt;
}

std::string Lemmatizer::Lemmatize(std::string_view surface,
                                  CoarsePos pos) const {
  std::string word = AsciiLower(surface);
  if (pos == CoarsePos::kOther) return word;
  if (auto it = exceptions_.find({word, pos}); it != exceptions_.end()) {
    return it->second;
  }
  std::optional<std::string> stem = Step(word, pos);
  if (!stem) return word;
  if (auto it = exceptions_.find({*stem, pos}); it != exceptions_.end()) {
    return it->second;
  }
  // Only accept a rewrite that is itself a fixed point; otherwise the rule
  // is stripping part of the stem ("business" -> "busines").
  return Step(*stem, pos) ? word : *stem;
}

std::string Lemmatizer::ToJson() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json exc = nlohmann::ordered_json::object();
  for (CoarsePos pos : {CoarsePos::kVerb, CoarsePos::kNoun, CoarsePos::kAdj}) {
    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    for (const auto& [key, lemma] : exceptions_) {
      if (key.second == pos) table[key.first] = lemma;
    }
    exc[std::string(CoarsePosName(pos))] = std::move(table);
  }
  j["exceptions"] = std::move(exc);
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for (const auto& [pos, list] : rules_) {
    for (const SuffixRule& r : list) {
      rules.push_back({{"pos", CoarsePosName(pos)},
                       {"suffix", r.suffix},
                       {"replacement", r.replacement},
                       {"min_stem", r.min_stem}});
    }
  }
  j["suffix_rules"] = std::move(rules);
  return j.dump(1);
}

// ---------------------------------------------------------------------------
// PosTagger

PosTagger PosTagger::Load(const fs::path& path) {
  std::unordered_map<std::string, CoarsePos> lexicon;
  for (const std::string& line : SplitLines(ReadFile(path))) {
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kLoadError, "lexicon",
                  fmt::format("{}: malformed line '{}'", path.string(), line));
    }
    lexicon[AsciiLower(line.substr(0, tab))] =
        ParseCoarsePos(line.substr(tab + 1));
  }
  return PosTagger(std::move(lexicon));
}

CoarsePos PosTagger::Tag(std::string_view token) const {
  auto it = lexicon_.find(AsciiLower(token));
  return it == lexicon_.end() ? CoarsePos::kOther : it->second;
}

namespace {

bool InList(std::initializer_list<std::string_view> list, std::string_view w) {
  return std::find(list.begin(), list.end(), w) != list.end();
}

}  // namespace

// Unigram tags, then a few contextual NOUN -> VERB patches in the style of
// Brill's rules (PREVTAG TO, PREVTAG MD, PREVWORD pronoun, NEXTWORD det).
std::vector<CoarsePos> PosTagger::TagAll(
    const std::vector<std::string>& tokens) const {
  std::vector<CoarsePos> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(Tag(t));
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  for (const std::string& t : tokens) lower.push_back(AsciiLower(t));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (out[i] != CoarsePos::kNoun) continue;
    const std::string_view prev = i > 0 ? std::string_view(lower[i - 1]) : "";
    const std::string_view next =
        i + 1 < tokens.size() ? std::string_view(lower[i + 1]) : "";
    if (InList({"to", "will", "would", "can", "could", "shall", "should",
                "may", "might", "must", "i", "we", "they", "you"},
               prev)) {
      out[i] = CoarsePos::kVerb;
      continue;
    }
    const bool prev_blocks =
        i > 0 && (out[i - 1] == CoarsePos::kAdj ||
                  InList({"the", "a", "an", "our", "their", "your", "my", "his",
                          "its", "this", "that", "these", "those", "of"},
                         prev));
    if (!prev_blocks &&
        InList({"the", "a", "an", "our", "their", "your", "my", "us", "them",
                "me", "him", "everyone", "everything"},
               next)) {
      out[i] = CoarsePos::kVerb;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::set<std::string>& StopVerbs() {
  static const std::set<std::string> kStop = {
      "be",  "try",    "have", "do",  "make",  "get",
      "must", "should", "can", "may", "might", "want"};
  return kStop;
}

bool IsStopVerb(std::string_view lemma) {
  return StopVerbs().contains(AsciiLower(lemma));
}

fs::path DataDir(const fs::path& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (const char* env = std::getenv("CONFRA_DATA_DIR"); env && *env) {
    return env;
  }
  return CONFRA_DEFAULT_DATA_DIR;
}

LexicalTools LexicalTools::LoadDefault(const fs::path& data_dir) {
  const fs::path dir = DataDir(data_dir);
  LexicalTools tools;
  tools.lemmatizer = Lemmatizer::Load(dir / "lemmatizer-tables.json");
  tools.tagger = PosTagger::Load(dir / "pos-lexicon.tsv");
  return tools;
}

}  // namespace confra
