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

// Review tasks for the human evaluation sessions and the small HTTP service
// that hands them out and records votes.

#ifndef CONFRA_SERVICE_H_
#define CONFRA_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confra/corpus.h"
#include "confra/evaluation.h"
#include "confra/model.h"
#include "json.hpp"

namespace confra {

enum class TaskKind { kBinaryCtJudgment, kBestWorstSpans };

std::string_view TaskKindName(TaskKind kind);
TaskKind ParseTaskKind(std::string_view name);

struct ReviewCandidate {
  std::string candidate_id;  // opaque; the player lives in the mapping file
  bool is_conspiratorial = false;
  std::vector<Span> spans;

  friend bool operator==(const ReviewCandidate&,
                         const ReviewCandidate&) = default;
};

struct ReviewTask {
  std::string item_id;
  TaskKind kind = TaskKind::kBestWorstSpans;
  std::string message_id;
  std::string text;
  std::vector<ReviewCandidate> candidates;

  friend bool operator==(const ReviewTask&, const ReviewTask&) = default;
};

nlohmann::ordered_json ToJson(const ReviewTask& t);
ReviewTask TaskFromJson(const nlohmann::json& j);

struct PreparedTasks {
  std::vector<ReviewTask> tasks;
  // candidate id -> player ("<model_id>/<strategy>"); server-side only.
  std::map<std::string, std::string> candidate_player;
};

// Player label used for a prediction set.
std::string PlayerId(const ModelPrediction& p);

// One task per message predicted by at least two players (best-worst), or
// one per message for binary judgments. Candidate ids are derived from
// `seed`, the item and the player, so they reveal nothing about the model.
// Throws kInvalidArgument when fewer than two players are present for
// best-worst tasks.
PreparedTasks PrepareTasks(const Corpus& corpus,
                           std::span<const ModelPrediction> predictions,
                           TaskKind kind, std::uint64_t seed);

void WriteTasks(const std::filesystem::path& tasks_path,
                const std::filesystem::path& mapping_path,
                const PreparedTasks& prepared);
std::vector<ReviewTask> ReadTasks(const std::filesystem::path& path);
std::map<std::string, std::string> ReadCandidateMapping(
    const std::filesystem::path& path);

enum class Coverage {
  kFull,      // every annotator sees every item
  kBalanced,  // next item is the least-answered one, capped per item
};

Coverage ParseCoverage(std::string_view name);

struct ServiceOptions {
  std::filesystem::path votes_path;      // best-worst votes (JSONL)
  std::filesystem::path judgments_path;  // binary judgments (JSONL)
  std::uint64_t seed = 0;
  std::string token;  // empty: no check
  Coverage coverage = Coverage::kFull;
  std::size_t per_item = 0;  // balanced cap; 0 = unlimited
  std::filesystem::path static_dir;
  bool blind_labels = false;  // hide span labels, show highlights only
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON or empty
};

// Transport-independent request handling; thread-safe.
class ReviewService {
 public:
  // Replays existing vote/judgment files so a restart keeps progress.
  ReviewService(std::vector<ReviewTask> tasks, ServiceOptions options);

  ApiResponse NextTask(const std::string& annotator);
  ApiResponse PostVote(const std::string& body);
  ApiResponse Progress(const std::string& annotator = "");

  // Letter order shown to `annotator` for `item`: a seeded permutation of
  // the candidate indices.
  std::vector<std::size_t> CandidateOrder(const std::string& annotator,
                                          const ReviewTask& task) const;

  bool Authorized(std::string_view token) const;
  const ServiceOptions& options() const { return options_; }

 private:
  const ReviewTask* FindTask(const std::string& item_id) const;
  std::vector<std::size_t> ItemOrder(const std::string& annotator) const;
  nlohmann::ordered_json TaskView(const std::string& annotator,
                                  const ReviewTask& task) const;

  std::vector<ReviewTask> tasks_;
  std::map<std::string, std::size_t> by_item_;
  ServiceOptions options_;

  mutable std::mutex mu_;
  std::map<std::string, std::set<std::string>> answered_;  // annotator -> items
  std::map<std::string, std::size_t> answers_per_item_;
  std::map<std::string, std::string> assigned_;  // annotator -> current item
};

// HTTP front end: GET /api/tasks/next?annotator=ID, POST /api/votes,
// GET /api/progress[?annotator=ID], plus the UI bundle (static_dir) or a
// built-in placeholder page at "/".
class ReviewHttpServer {
 public:
  explicit ReviewHttpServer(ReviewService& service);
  ~ReviewHttpServer();

  // Returns the bound port (`port` 0 picks a free one); throws kIoError.
  int Bind(const std::string& host, int port);
  // Blocks until Stop().
  void Listen();
  void Stop();
  // Waits until Listen() is accepting connections.
  void WaitUntilReady() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace confra

#endif  // CONFRA_SERVICE_H_
