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

#ifndef CONFRA_ERROR_H_
#define CONFRA_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace confra {

// Machine-readable error codes. The CLI prefixes each with the module that
// raised it ("corpus.EMPTY_CORPUS", "prompting.TRANSPORT_FAILED", ...).
enum class ErrorCode {
  kInvalidArgument,
  kIdMismatch,
  kParseError,
  kIoError,
  kEmptyCorpus,
  kInsufficientGroup,
  kInvalidRecord,
  kAlreadyAnonymized,
  kLoadError,
  kDegenerate,
  kConfigError,
  kTransportFailed,
  kClientError,
  kParseFailed,
  kSchemaViolation,
  kKappaUndefined,
  kNoOverlap,
  kUnknownLabel,
  kUnknownCandidate,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message)
      : std::runtime_error(message), code_(code), module_(std::move(module)) {}

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }

  // "module.CODE", e.g. "evaluation.KAPPA_UNDEFINED".
  std::string qualified_code() const;

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace confra

#endif  // CONFRA_ERROR_H_
