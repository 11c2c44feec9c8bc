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

#ifndef CONFRA_FILEIO_H_
#define CONFRA_FILEIO_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace confra {

std::string ReadFile(const std::filesystem::path& path);

// Writes via a sibling temp file, fsync and rename, holding an exclusive
// advisory lock on "<path>.lock" for the duration.
void AtomicWriteFile(const std::filesystem::path& path,
                     std::string_view content);

// Appends one line under the same lock and fsyncs before returning.
void AppendLineDurable(const std::filesystem::path& path,
                       std::string_view line);

// Splits into lines, dropping the terminator; a final line without a
// newline is still returned.
std::vector<std::string> SplitLines(std::string_view content);

// Hex SHA-256.
std::string Sha256Hex(std::string_view data);
std::string FileDigest(const std::filesystem::path& path);

// Hex HMAC-SHA256.
std::string HmacSha256Hex(std::string_view key, std::string_view data);

}  // namespace confra

#endif  // CONFRA_FILEIO_H_
