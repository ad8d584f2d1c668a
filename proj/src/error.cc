// Copyright 2026 The Agent Warden Authors
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

#include "agent_warden/error.h"

namespace agent_warden {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownAttribute: return "UnknownAttribute";
    case ErrorCode::kUnknownValue: return "UnknownValue";
    case ErrorCode::kMissingAttribute: return "MissingAttribute";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kCoverageMismatch: return "CoverageMismatch";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnboundVariable: return "UnboundVariable";
    case ErrorCode::kBadRegex: return "BadRegex";
    case ErrorCode::kUnknownGoal: return "UnknownGoal";
    case ErrorCode::kUnlabeledSubject: return "UnlabeledSubject";
    case ErrorCode::kUnknownAgentNode: return "UnknownAgentNode";
    case ErrorCode::kNoMatchingInvoke: return "NoMatchingInvoke";
    case ErrorCode::kDuplicateReturn: return "DuplicateReturn";
    case ErrorCode::kBlockedInvocation: return "BlockedInvocation";
    case ErrorCode::kSelfMessage: return "SelfMessage";
    case ErrorCode::kNotPending: return "NotPending";
    case ErrorCode::kBadOriginKind: return "BadOriginKind";
    case ErrorCode::kSelectorViolation: return "SelectorViolation";
    case ErrorCode::kPendingInvocation: return "PendingInvocation";
    case ErrorCode::kDanglingReference: return "DanglingReference";
    case ErrorCode::kNonTermination: return "NonTermination";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace agent_warden
