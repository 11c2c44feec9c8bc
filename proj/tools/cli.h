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

#ifndef CONFRA_TOOLS_CLI_H_
#define CONFRA_TOOLS_CLI_H_

#include <string>
#include <vector>

namespace confra::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;  // error JSON on stderr
inline constexpr int kExitUsage = 2;

// Runs one CLI invocation. `args` excludes the program name.
int Run(const std::vector<std::string>& args);

}  // namespace confra::cli

#endif  // CONFRA_TOOLS_CLI_H_
