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

#include "confra/service.h"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <utility>

#include "confra/error.h"
#include "confra/fileio.h"
#include "confra/rng.h"
#include "httplib.h"

namespace confra {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kModule[] = "service";

ordered_json Status(std::string_view message) {
  return {{"status", message}};
}

ApiResponse Reply(int status, const ordered_json& body) {
  return {status, body.dump()};
}

ApiResponse Problem(int status, std::string_view message) {
  return Reply(status, {{"error", message}});
}

}  // namespace

std::string_view TaskKindName(TaskKind kind) {
  return kind == TaskKind::kBinaryCtJudgment ? "binary_ct_judgment"
                                             : "best_worst_spans";
}

TaskKind ParseTaskKind(std::string_view name) {
  if (name == "binary_ct_judgment") return TaskKind::kBinaryCtJudgment;
  if (name == "best_worst_spans") return TaskKind::kBestWorstSpans;
  throw Error(ErrorCode::kInvalidArgument, kModule,
              fmt::format("unknown task kind '{}'", name));
}

Coverage ParseCoverage(std::string_view name) {
  if (name == "full") return Coverage::kFull;
  if (name == "balanced") return Coverage::kBalanced;
  throw Error(ErrorCode::kInvalidArgument, kModule,
              fmt::format("unknown coverage '{}'", name));
}

ordered_json ToJson(const ReviewTask& t) {
  ordered_json cands = ordered_json::array();
  for (const ReviewCandidate& c : t.candidates) {
    ordered_json spans = ordered_json::array();
    for (const Span& s : c.spans) spans.push_back(ToJson(s));
    cands.push_back({{"candidate_id", c.candidate_id},
                     {"is_conspiratorial", c.is_conspiratorial},
                     {"spans", std::move(spans)}});
  }
  return {{"item_id", t.item_id},
          {"kind", TaskKindName(t.kind)},
          {"message_id", t.message_id},
          {"text", t.text},
          {"candidates", std::move(cands)}};
}

ReviewTask TaskFromJson(const json& j) {
  ReviewTask t;
  t.item_id = j.at("item_id").get<std::string>();
  t.kind = ParseTaskKind(j.at("kind").get<std::string>());
  t.message_id = j.at("message_id").get<std::string>();
  t.text = j.at("text").get<std::string>();
  for (const json& c : j.at("candidates")) {
    ReviewCandidate rc;
    rc.candidate_id = c.at("candidate_id").get<std::string>();
    rc.is_conspiratorial = c.value("is_conspiratorial", false);
    for (const json& s : c.at("spans")) rc.spans.push_back(SpanFromJson(s));
    t.candidates.push_back(std::move(rc));
  }
  return t;
}

std::string PlayerId(const ModelPrediction& p) {
  return fmt::format("{}/{}", p.model_id, StrategyName(p.strategy));
}

PreparedTasks PrepareTasks(const Corpus& corpus,
                           std::span<const ModelPrediction> predictions,
                           TaskKind kind, std::uint64_t seed) {
  std::map<std::string, std::map<std::string, const ModelPrediction*>> by_msg;
  std::set<std::string> players;
  for (const ModelPrediction& p : predictions) {
    const std::string player = PlayerId(p);
    players.insert(player);
    if (!by_msg[p.message_id].emplace(player, &p).second) {
      throw Error(ErrorCode::kInvalidRecord, kModule,
                  fmt::format("{} has two predictions for {}", player,
                              p.message_id));
    }
  }
  if (kind == TaskKind::kBestWorstSpans && players.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                fmt::format("best-worst tasks need predictions from at least "
                            "two players, got {}",
                            players.size()));
  }
  PreparedTasks out;
  for (const Message& m : corpus.messages()) {
    auto it = by_msg.find(m.id);
    if (it == by_msg.end()) continue;
    if (kind == TaskKind::kBestWorstSpans && it->second.size() < 2) continue;
    ReviewTask t;
    t.item_id = m.id;
    t.kind = kind;
    t.message_id = m.id;
    t.text = m.text;
    for (const auto& [player, pred] : it->second) {
      ReviewCandidate c;
      c.candidate_id =
          "c" + Sha256Hex(fmt::format("{}|{}|{}", seed, t.item_id, player))
                    .substr(0, 12);
      c.is_conspiratorial = pred->is_conspiratorial;
      c.spans = pred->spans;
      out.candidate_player.emplace(c.candidate_id, player);
      t.candidates.push_back(std::move(c));
    }
    // Stored order carries no information about the players.
    std::sort(t.candidates.begin(), t.candidates.end(),
              [](const ReviewCandidate& a, const ReviewCandidate& b) {
                return a.candidate_id < b.candidate_id;
              });
    out.tasks.push_back(std::move(t));
  }
  return out;
}

void WriteTasks(const std::filesystem::path& tasks_path,
                const std::filesystem::path& mapping_path,
                const PreparedTasks& prepared) {
  std::string lines;
  for (const ReviewTask& t : prepared.tasks) lines += ToJson(t).dump() + "\n";
  AtomicWriteFile(tasks_path, lines);
  ordered_json mapping = ordered_json::object();
  for (const auto& [c, p] : prepared.candidate_player) mapping[c] = p;
  AtomicWriteFile(mapping_path, mapping.dump(2) + "\n");
}

std::vector<ReviewTask> ReadTasks(const std::filesystem::path& path) {
  std::vector<ReviewTask> out;
  const std::vector<std::string> lines = SplitLines(ReadFile(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(TaskFromJson(json::parse(lines[i])));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, kModule,
                  fmt::format("{}:{}: {}", path.string(), i + 1, e.what()));
    }
  }
  return out;
}

std::map<std::string, std::string> ReadCandidateMapping(
    const std::filesystem::path& path) {
  try {
    return json::parse(ReadFile(path)).get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, kModule,
                fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---------------------------------------------------------------------------
// ReviewService

ReviewService::ReviewService(std::vector<ReviewTask> tasks,
                             ServiceOptions options)
    : tasks_(std::move(tasks)), options_(std::move(options)) {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (!by_item_.emplace(tasks_[i].item_id, i).second) {
      throw Error(ErrorCode::kInvalidRecord, kModule,
                  fmt::format("duplicate item '{}'", tasks_[i].item_id));
    }
  }
  auto replay = [&](const std::string& annotator, const std::string& item) {
    if (answered_[annotator].insert(item).second) ++answers_per_item_[item];
  };
  if (!options_.votes_path.empty() && std::filesystem::exists(options_.votes_path)) {
    for (const VoteRecord& v : ReadVotes(options_.votes_path)) {
      replay(v.annotator_id, v.item_id);
    }
  }
  if (!options_.judgments_path.empty() &&
      std::filesystem::exists(options_.judgments_path)) {
    for (const JudgmentRecord& j : ReadJudgments(options_.judgments_path)) {
      replay(j.annotator_id, j.item_id);
    }
  }
}

bool ReviewService::Authorized(std::string_view token) const {
  return options_.token.empty() || token == options_.token;
}

const ReviewTask* ReviewService::FindTask(const std::string& item_id) const {
  auto it = by_item_.find(item_id);
  return it == by_item_.end() ? nullptr : &tasks_[it->second];
}

std::vector<std::size_t> ReviewService::ItemOrder(
    const std::string& annotator) const {
  std::vector<std::size_t> order(tasks_.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 gen(DeriveSeed(options_.seed, HashString(annotator)));
  SeededShuffle(std::span<std::size_t>(order), gen);
  return order;
}

std::vector<std::size_t> ReviewService::CandidateOrder(
    const std::string& annotator, const ReviewTask& task) const {
  std::vector<std::size_t> order(task.candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 gen(DeriveSeed(DeriveSeed(options_.seed, HashString(annotator)),
                                 HashString(task.item_id)));
  SeededShuffle(std::span<std::size_t>(order), gen);
  return order;
}

namespace {

std::string Letter(std::size_t i) {
  std::string out;
  ++i;
  while (i > 0) {
    --i;
    out.insert(out.begin(), static_cast<char>('A' + i % 26));
    i /= 26;
  }
  return out;
}

}  // namespace

ordered_json ReviewService::TaskView(const std::string& annotator,
                                     const ReviewTask& task) const {
  ordered_json cands = ordered_json::array();
  const std::vector<std::size_t> order = CandidateOrder(annotator, task);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const ReviewCandidate& c = task.candidates[order[pos]];
    ordered_json spans = ordered_json::array();
    for (const Span& s : c.spans) {
      ordered_json js = ToJson(s);
      if (options_.blind_labels) js.erase("label");
      spans.push_back(std::move(js));
    }
    cands.push_back({{"letter", Letter(pos)},
                     {"is_conspiratorial", c.is_conspiratorial},
                     {"spans", std::move(spans)}});
  }
  return {{"item_id", task.item_id},
          {"kind", TaskKindName(task.kind)},
          {"text", task.text},
          {"candidates", std::move(cands)}};
}

ApiResponse ReviewService::NextTask(const std::string& annotator) {
  if (annotator.empty()) return Problem(400, "annotator is required");
  std::lock_guard<std::mutex> lock(mu_);
  const std::set<std::string>& done = answered_[annotator];
  auto cur = assigned_.find(annotator);
  if (cur != assigned_.end() && !done.count(cur->second)) {
    return Reply(200, TaskView(annotator, *FindTask(cur->second)));
  }
  const ReviewTask* pick = nullptr;
  std::size_t pick_count = 0;
  for (std::size_t idx : ItemOrder(annotator)) {
    const ReviewTask& t = tasks_[idx];
    if (done.count(t.item_id)) continue;
    if (options_.coverage == Coverage::kFull) {
      pick = &t;
      break;
    }
    auto it = answers_per_item_.find(t.item_id);
    const std::size_t n = it == answers_per_item_.end() ? 0 : it->second;
    if (options_.per_item > 0 && n >= options_.per_item) continue;
    if (!pick || n < pick_count) {
      pick = &t;
      pick_count = n;
    }
  }
  if (!pick) {
    assigned_.erase(annotator);
    return {204, ""};
  }
  assigned_[annotator] = pick->item_id;
  return Reply(200, TaskView(annotator, *pick));
}

ApiResponse ReviewService::PostVote(const std::string& body) {
  const json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return Problem(400, "body is not a JSON object");
  auto str = [&](const char* key) -> std::string {
    return j.contains(key) && j[key].is_string() ? j[key].get<std::string>() : "";
  };
  const std::string item_id = str("item_id");
  const std::string annotator = str("annotator_id");
  if (item_id.empty() || annotator.empty()) {
    return Problem(400, "item_id and annotator_id are required");
  }
  const ReviewTask* task = FindTask(item_id);
  if (!task) return Problem(404, fmt::format("unknown item '{}'", item_id));

  std::string line;
  std::filesystem::path target;
  if (task->kind == TaskKind::kBinaryCtJudgment) {
    if (!j.contains("is_conspiratorial") || !j["is_conspiratorial"].is_boolean()) {
      return Problem(422, "is_conspiratorial must be a boolean");
    }
    line = ToJson(JudgmentRecord{item_id, annotator,
                                 j["is_conspiratorial"].get<bool>()})
               .dump();
    target = options_.judgments_path;
  } else {
    const std::string best = str("best");
    const std::string worst = str("worst");
    if (best.empty() || worst.empty()) {
      return Problem(422, "best and worst are required");
    }
    if (best == worst) return Problem(422, "best and worst must differ");
    const std::vector<std::size_t> order = CandidateOrder(annotator, *task);
    auto resolve = [&](const std::string& letter) -> const ReviewCandidate* {
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (Letter(pos) == letter) return &task->candidates[order[pos]];
      }
      return nullptr;
    };
    const ReviewCandidate* b = resolve(best);
    const ReviewCandidate* w = resolve(worst);
    if (!b || !w) return Problem(422, "unknown candidate letter");
    line = ToJson(VoteRecord{item_id, annotator, b->candidate_id, w->candidate_id})
               .dump();
    target = options_.votes_path;
  }
  if (target.empty()) return Problem(500, "no output file configured");

  std::lock_guard<std::mutex> lock(mu_);
  if (answered_[annotator].count(item_id)) {
    return Problem(409, "already answered");
  }
  try {
    AppendLineDurable(target, line);
  } catch (const Error& e) {
    return Problem(500, e.what());
  }
  answered_[annotator].insert(item_id);
  ++answers_per_item_[item_id];
  if (auto it = assigned_.find(annotator);
      it != assigned_.end() && it->second == item_id) {
    assigned_.erase(it);
  }
  return Reply(201, Status("recorded"));
}

ApiResponse ReviewService::Progress(const std::string& annotator) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!annotator.empty()) {
    auto it = answered_.find(annotator);
    return Reply(200, {{"annotator", annotator},
                       {"answered", it == answered_.end() ? 0 : it->second.size()},
                       {"total_items", tasks_.size()}});
  }
  ordered_json per = ordered_json::object();
  for (const auto& [a, items] : answered_) {
    if (!items.empty()) per[a] = items.size();
  }
  return Reply(200, {{"total_items", tasks_.size()}, {"annotators", std::move(per)}});
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

constexpr char kPlaceholderPage[] = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>confra review</title></head>
<body>
<h1>confra review service</h1>
<p>No UI bundle configured (start with --static-dir). API:</p>
<ul>
<li>GET /api/tasks/next?annotator=ID</li>
<li>POST /api/votes</li>
<li>GET /api/progress</li>
</ul>
</body></html>
)";

std::string RequestToken(const httplib::Request& req) {
  if (req.has_header("X-Confra-Token")) return req.get_header_value("X-Confra-Token");
  const std::string auth = req.get_header_value("Authorization");
  constexpr std::string_view kBearer = "Bearer ";
  if (auth.starts_with(kBearer)) return auth.substr(kBearer.size());
  return req.get_param_value("token");
}

}  // namespace

struct ReviewHttpServer::Impl {
  ReviewService& service;
  httplib::Server server;
};

ReviewHttpServer::ReviewHttpServer(ReviewService& service)
    : impl_(new Impl{service, {}}) {
  httplib::Server& srv = impl_->server;
  ReviewService& svc = impl_->service;
  auto guarded = [&svc](auto handler) {
    return [&svc, handler](const httplib::Request& req, httplib::Response& res) {
      ApiResponse r;
      if (!svc.Authorized(RequestToken(req))) {
        r = Problem(401, "missing or wrong token");
      } else {
        r = handler(req);
      }
      res.status = r.status;
      if (!r.body.empty()) res.set_content(r.body, "application/json; charset=utf-8");
    };
  };
  srv.Get("/api/tasks/next", guarded([&svc](const httplib::Request& req) {
            return svc.NextTask(req.get_param_value("annotator"));
          }));
  srv.Post("/api/votes", guarded([&svc](const httplib::Request& req) {
             return svc.PostVote(req.body);
           }));
  srv.Get("/api/progress", guarded([&svc](const httplib::Request& req) {
            return svc.Progress(req.get_param_value("annotator"));
          }));
  const std::filesystem::path& dir = svc.options().static_dir;
  if (!dir.empty()) {
    if (!srv.set_mount_point("/", dir.string())) {
      throw Error(ErrorCode::kIoError, kModule,
                  fmt::format("static dir '{}' is not readable", dir.string()));
    }
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
    });
  }
}

ReviewHttpServer::~ReviewHttpServer() = default;

int ReviewHttpServer::Bind(const std::string& host, int port) {
  httplib::Server& srv = impl_->server;
  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound <= 0) {
      throw Error(ErrorCode::kIoError, kModule,
                  fmt::format("cannot bind {}", host));
    }
    return bound;
  }
  if (!srv.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIoError, kModule,
                fmt::format("cannot bind {}:{}", host, port));
  }
  return port;
}

void ReviewHttpServer::Listen() { impl_->server.listen_after_bind(); }

void ReviewHttpServer::Stop() { impl_->server.stop(); }

void ReviewHttpServer::WaitUntilReady() const { impl_->server.wait_until_ready(); }

}  // namespace confra
