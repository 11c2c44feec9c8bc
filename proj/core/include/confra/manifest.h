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

// Per-command run manifest: what went in, what came out, and under which
// configuration.

#ifndef CONFRA_MANIFEST_H_
#define CONFRA_MANIFEST_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace confra {

std::string_view ToolVersion();

struct DigestEntry {
  std::string name;    // file name, no directory
  std::string sha256;

  friend bool operator==(const DigestEntry&, const DigestEntry&) = default;
};

class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::ordered_json config);

  void AddInput(const std::filesystem::path& path);
  void AddOutput(const std::filesystem::path& path);

  // Digest of command, config, input digests and tool version. Timestamps
  // and output locations are excluded so reruns on the same inputs agree.
  std::string RunDigest() const;
  std::string run_id() const { return RunDigest().substr(0, 16); }

  const std::vector<DigestEntry>& inputs() const { return inputs_; }
  const std::vector<DigestEntry>& outputs() const { return outputs_; }

  nlohmann::ordered_json ToJson() const;
  // Stamps finished_at and writes atomically.
  void Write(const std::filesystem::path& path);

 private:
  std::string command_;
  nlohmann::ordered_json config_;
  std::vector<DigestEntry> inputs_;
  std::vector<DigestEntry> outputs_;
  std::string started_at_;
  std::string finished_at_;
};

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string UtcNow();

}  // namespace confra

#endif  // CONFRA_MANIFEST_H_
