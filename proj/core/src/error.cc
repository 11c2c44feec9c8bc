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

#include "confra/error.h"

namespace confra {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kIdMismatch: return "ID_MISMATCH";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kEmptyCorpus: return "EMPTY_CORPUS";
    case ErrorCode::kInsufficientGroup: return "INSUFFICIENT_GROUP";
    case ErrorCode::kInvalidRecord: return "INVALID_RECORD";
    case ErrorCode::kAlreadyAnonymized: return "ALREADY_ANONYMIZED";
    case ErrorCode::kLoadError: return "LOAD_ERROR";
    case ErrorCode::kDegenerate: return "DEGENERATE";
    case ErrorCode::kConfigError: return "CONFIG_ERROR";
    case ErrorCode::kTransportFailed: return "TRANSPORT_FAILED";
    case ErrorCode::kClientError: return "CLIENT_ERROR";
    case ErrorCode::kParseFailed: return "PARSE_FAILED";
    case ErrorCode::kSchemaViolation: return "SCHEMA_VIOLATION";
    case ErrorCode::kKappaUndefined: return "KAPPA_UNDEFINED";
    case ErrorCode::kNoOverlap: return "NO_OVERLAP";
    case ErrorCode::kUnknownLabel: return "UNKNOWN_LABEL";
    case ErrorCode::kUnknownCandidate: return "UNKNOWN_CANDIDATE";
  }
  return "UNKNOWN";
}

std::string Error::qualified_code() const {
  return module_ + "." + std::string(ErrorCodeName(code_));
}

}  // namespace confra
