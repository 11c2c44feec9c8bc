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

// Seeds the lemmatizer exception table from a reference lemmatizer run.
//
//   confra-seed-lemmatizer BASE.json REFERENCE.tsv OUT.json
//
// REFERENCE.tsv holds "surface<TAB>VERB|NOUN|ADJ<TAB>lemma" lines produced
// once by a reference tool. Every disagreement between the suffix rules and
// the reference becomes an exception; the loop repeats because new
// exceptions pin new fixed points.

#include <fmt/format.h>

#include <iostream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "confra/error.h"
#include "confra/fileio.h"
#include "confra/lexicon.h"

int main(int argc, char** argv) {
  using confra::CoarsePos;
  if (argc != 4) {
    std::cerr << "usage: confra-seed-lemmatizer BASE.json REFERENCE.tsv OUT.json\n";
    return 2;
  }
  try {
    const confra::Lemmatizer base = confra::Lemmatizer::Load(argv[1]);
    std::vector<std::tuple<std::string, CoarsePos, std::string>> reference;
    for (const std::string& line : confra::SplitLines(confra::ReadFile(argv[2]))) {
      const auto t1 = line.find('\t');
      const auto t2 = line.find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos) continue;
      reference.emplace_back(line.substr(0, t1),
                             confra::ParseCoarsePos(line.substr(t1 + 1, t2 - t1 - 1)),
                             line.substr(t2 + 1));
    }
    auto exceptions = base.exceptions();
    std::size_t disagreements = 0;
    for (int round = 0; round < 8; ++round) {
      confra::Lemmatizer lem(exceptions, base.rules());
      disagreements = 0;
      for (const auto& [surface, pos, lemma] : reference) {
        if (lem.Lemmatize(surface, pos) != lemma) {
          ++disagreements;
          // Hand-written base entries win over the reference.
          if (!base.exceptions().contains({surface, pos})) {
            exceptions[{surface, pos}] = lemma;
          }
        }
      }
      std::cerr << fmt::format("round {}: {} disagreements, {} exceptions\n",
                               round, disagreements, exceptions.size());
      if (disagreements == 0) break;
    }
    confra::Lemmatizer seeded(exceptions, base.rules());
    confra::AtomicWriteFile(argv[3], seeded.ToJson() + "\n");
    return 0;
  } catch (const confra::Error& e) {
    std::cerr << e.qualified_code() << ": " << e.what() << "\n";
    return 1;
  }
}
