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

#include "confra/manifest.h"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <ctime>
#include <utility>

#include "confra/fileio.h"

namespace confra {

using nlohmann::ordered_json;

std::string_view ToolVersion() { return "confra 0.1.0"; }

std::string UtcNow() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", tm);
}

RunManifest::RunManifest(std::string command, ordered_json config)
    : command_(std::move(command)),
      config_(std::move(config)),
      started_at_(UtcNow()) {}

void RunManifest::AddInput(const std::filesystem::path& path) {
  inputs_.push_back({path.filename().string(), FileDigest(path)});
}

void RunManifest::AddOutput(const std::filesystem::path& path) {
  outputs_.push_back({path.filename().string(), FileDigest(path)});
}

std::string RunManifest::RunDigest() const {
  ordered_json basis;
  basis["command"] = command_;
  basis["config"] = config_;
  ordered_json in = ordered_json::array();
  for (const auto& d : inputs_) in.push_back({d.name, d.sha256});
  basis["inputs"] = std::move(in);
  basis["tool_version"] = ToolVersion();
  return Sha256Hex(basis.dump());
}

ordered_json RunManifest::ToJson() const {
  ordered_json j;
  j["run_id"] = run_id();
  j["run_digest"] = RunDigest();
  j["command"] = command_;
  j["tool_version"] = ToolVersion();
  j["config"] = config_;
  auto list = [](const std::vector<DigestEntry>& ds) {
    ordered_json arr = ordered_json::array();
    for (const auto& d : ds) arr.push_back({{"name", d.name}, {"sha256", d.sha256}});
    return arr;
  };
  j["inputs"] = list(inputs_);
  j["outputs"] = list(outputs_);
  j["started_at"] = started_at_;
  j["finished_at"] = finished_at_;
  return j;
}

void RunManifest::Write(const std::filesystem::path& path) {
  finished_at_ = UtcNow();
  AtomicWriteFile(path, ToJson().dump(2) + "\n");
}

}  // namespace confra
