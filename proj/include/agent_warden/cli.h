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

// The agent-warden command line.
//
//   policy lint <pack>
//   run <scenario|dir|glob>... [--mode] [--policies] [--responder] [--format]
//   labels kappa <a> <b>
//   labels validate <file>
//   serve --scenario <file> [--bind] [--policies] [--ask-timeout]
//
// Settings missing from the command line are read from AGENT_WARDEN_<NAME>
// environment variables, then from the JSON config file named by --config or
// AGENT_WARDEN_CONFIG.

#ifndef AGENT_WARDEN_CLI_H_
#define AGENT_WARDEN_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace agent_warden::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitViolation = 1,
  kExitUsage = 2,
  kExitDataError = 3,
};

int Main(int argc, const char* const* argv, std::istream& in, std::ostream& out,
         std::ostream& err);

// Expands files, directories (their *.json) and file-name globs, sorted and
// de-duplicated. Throws kIoError when an argument matches nothing.
std::vector<std::filesystem::path> ExpandScenarioArgs(const std::vector<std::string>& args);

}  // namespace agent_warden::cli

#endif  // AGENT_WARDEN_CLI_H_
