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

#ifndef AGENT_WARDEN_ERROR_H_
#define AGENT_WARDEN_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace agent_warden {

enum class ErrorCode {
  // labels
  kUnknownAttribute,
  kUnknownValue,
  kMissingAttribute,
  kLengthMismatch,
  kEmptyInput,
  kCoverageMismatch,
  kSchemaError,
  // policy language
  kSyntaxError,
  kUnboundVariable,
  kBadRegex,
  kUnknownGoal,
  // system view
  kUnlabeledSubject,
  kUnknownAgentNode,
  kNoMatchingInvoke,
  kDuplicateReturn,
  kBlockedInvocation,
  kSelfMessage,
  // decision engine
  kNotPending,
  // sememory
  kBadOriginKind,
  kSelectorViolation,
  kPendingInvocation,
  // harness
  kDanglingReference,
  kNonTermination,
  // io
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception. The code is the
// stable, testable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace agent_warden

#endif  // AGENT_WARDEN_ERROR_H_
