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


#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "confra/evaluation.h"
#include "confra/framemap.h"
#include "confra/prompting.h"
#include "confra/text.h"
#include "oracles.h"

namespace confra {
namespace {

void BM_PowerLawApprox(benchmark::State& state) {
  const auto xs = oracle::SampleZeta(static_cast<std::size_t>(state.range(0)), 2.5, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(FitDiscretePowerLaw(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PowerLawApprox)->Arg(1000)->Arg(10000);

void BM_PowerLawExact(benchmark::State& state) {
  const auto xs = oracle::SampleZeta(10000, 2.5, 3, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(FitDiscretePowerLaw(xs, PowerLawMethod::kExactZeta));
  }
}
BENCHMARK(BM_PowerLawExact)->Unit(benchmark::kMillisecond);

std::vector<GameRecord> RandomGames(std::size_t n) {
  std::mt19937_64 gen(3);
  const Outcome outcomes[] = {Outcome::kAWins, Outcome::kBWins, Outcome::kDraw};
  std::vector<GameRecord> games;
  for (std::size_t i = 0; i < n; ++i) {
    games.push_back({"m" + std::to_string(i), "frame_guided", "few_shot", outcomes[gen() % 3]});
  }
  return games;
}

// 1000 repetitions over 500 games.
void BM_Tournament(benchmark::State& state) {
  const auto games = RandomGames(500);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        RepeatedTournament(games, 1000, 42, kDefaultK, static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_Tournament)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_CohensKappa(benchmark::State& state) {
  std::mt19937_64 gen(5);
  const std::size_t n = 100000;
  std::unique_ptr<bool[]> a(new bool[n]), b(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = gen() % 4 == 0;
    b[i] = gen() % 3 == 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(CohensKappa({a.get(), n}, {b.get(), n}));
  }
}
BENCHMARK(BM_CohensKappa);

void BM_Tokenize(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < 200; ++i) text += "They plan to hide the résumé 🙂 of the elites. ";
  for (auto _ : state) benchmark::DoNotOptimize(Tokenize(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Tokenize);

void BM_BuildFewShotPrompt(benchmark::State& state) {
  const auto& ex = CanonicalExamples();
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildPrompt(PromptStrategy::kFrameGuided, "They hide it.", ex));
  }
}
BENCHMARK(BM_BuildFewShotPrompt);

}  // namespace
}  // namespace confra

BENCHMARK_MAIN();
