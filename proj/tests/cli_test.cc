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

#include "agent_warden/cli.h"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "support/oracles.h"

namespace agent_warden::cli {
namespace {

using nlohmann::json;
using testing::SourceDir;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome Invoke(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "agent-warden");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = Main(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

std::string Path(const std::string& relative) { return (SourceDir() / relative).string(); }

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() { unsetenv(name_); }

 private:
  const char* name_;
};

class TempFile {
 public:
  explicit TempFile(const std::string& body) {
    path_ = std::filesystem::temp_directory_path() /
            ("warden_cli_" + std::to_string(std::random_device()()) + ".tmp");
    std::ofstream(path_) << body;
  }
  ~TempFile() { std::filesystem::remove(path_); }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Invoke({}).code, kExitUsage);
  EXPECT_EQ(Invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"run"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"run", Path("scenarios"), "--mode", "paranoid"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"run", Path("scenarios"), "--format", "yaml"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"--help"}).code, kExitOk);
}

TEST(CliTest, PolicyLint) {
  Outcome ok = Invoke({"policy", "lint", Path("policies/default.pol")});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_NE(ok.out.find("4 policies"), std::string::npos) << ok.out;

  Outcome j = Invoke({"policy", "lint", Path("policies/default.pol"), "--format", "json"});
  ASSERT_EQ(j.code, kExitOk);
  json doc = json::parse(j.out);
  EXPECT_EQ(doc["version"], 1);

  TempFile broken("Goal deny\nPath tool:$A\nRule A.action=\"READ\"\n");
  Outcome bad = Invoke({"policy", "lint", broken.path()});
  EXPECT_EQ(bad.code, kExitDataError);
  EXPECT_NE(bad.err.find("SyntaxError"), std::string::npos) << bad.err;
  EXPECT_EQ(Invoke({"policy", "lint", "/nonexistent.pol"}).code, kExitDataError);
}

TEST(CliTest, LabelsKappa) {
  Outcome text = Invoke({"labels", "kappa", Path("data/injecagent_labels_human.json"),
                      Path("data/injecagent_labels_llm.json")});
  ASSERT_EQ(text.code, kExitOk) << text.err;
  EXPECT_NE(text.out.find("Overall"), std::string::npos);

  Outcome j = Invoke({"--format", "json", "labels", "kappa", Path("data/injecagent_labels_human.json"),
                   Path("data/injecagent_labels_llm.json")});
  ASSERT_EQ(j.code, kExitOk) << j.err;
  json doc = json::parse(j.out);
  EXPECT_EQ(doc["version"], 1);
  testing::KappaOracleResult oracle = testing::KappaOracle(
      Path("data/injecagent_labels_human.json"), Path("data/injecagent_labels_llm.json"));
  EXPECT_NEAR(doc["overall"].get<double>(), oracle.pooled, 1e-12);

  // Files that share no tool cannot be compared.
  Outcome disjoint = Invoke({"labels", "kappa", Path("data/injecagent_labels_human.json"),
                          Path("data/apibank_labels.json")});
  EXPECT_EQ(disjoint.code, kExitDataError);
}

TEST(CliTest, LabelsValidate) {
  Outcome ok = Invoke({"labels", "validate", Path("data/apibank_labels.json")});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  TempFile bad(R"({"subjects":[{"name":"t","kind":"tool","labels":{"object":"MOON"}}]})");
  EXPECT_EQ(Invoke({"labels", "validate", bad.path()}).code, kExitDataError);
}

TEST(CliTest, RunReportsAndExitCodes) {
  Outcome guarded = Invoke({"run", Path("scenarios")});
  EXPECT_EQ(guarded.code, kExitOk) << guarded.err;
  EXPECT_NE(guarded.out.find("TOTAL"), std::string::npos);

  Outcome naive = Invoke({"run", Path("scenarios/rag_poisoning_hub.json"), "--mode", "naive"});
  EXPECT_EQ(naive.code, kExitViolation);

  Outcome j = Invoke({"run", Path("scenarios/benign_*.json"), "--format", "json"});
  ASSERT_EQ(j.code, kExitOk) << j.err;
  json doc = json::parse(j.out);
  EXPECT_EQ(doc["version"], 1);
  EXPECT_EQ(doc["mode"], "guarded");
  EXPECT_EQ(doc["scenarios"].size(), 4u);
  EXPECT_EQ(doc["metrics"]["fpr"], 0.0);

  EXPECT_EQ(Invoke({"run", Path("scenarios/nothing_*.json")}).code, kExitDataError);
}

TEST(CliTest, EnvironmentBeatsConfigAndFlagsBeatEnvironment) {
  TempFile config(R"({"mode": "guarded", "format": "json"})");
  std::string scenario = Path("scenarios/rag_poisoning_hub.json");
  {
    ScopedEnv cfg("AGENT_WARDEN_CONFIG", config.path());
    Outcome from_config = Invoke({"run", scenario});
    EXPECT_EQ(from_config.code, kExitOk);
    EXPECT_EQ(json::parse(from_config.out)["mode"], "guarded");

    ScopedEnv mode("AGENT_WARDEN_MODE", "naive");
    Outcome from_env = Invoke({"run", scenario});
    EXPECT_EQ(from_env.code, kExitViolation);
    EXPECT_EQ(json::parse(from_env.out)["mode"], "naive");

    Outcome from_flag = Invoke({"run", scenario, "--mode", "guarded", "--format", "text"});
    EXPECT_EQ(from_flag.code, kExitOk);
    EXPECT_NE(from_flag.out.find("(guarded)"), std::string::npos);
  }
  TempFile bad_config(R"({"colour": "blue"})");
  EXPECT_EQ(Invoke({"--config", bad_config.path(), "run", scenario}).code, kExitDataError);
}

TEST(CliTest, TerminalResponderReadsStdin) {
  std::string scenario = Path("scenarios/confused_deputy.json");
  Outcome denied = Invoke({"run", scenario, "--policies", Path("policies/ask_variant.pol"),
                        "--responder", "terminal"},
                       "d\n");
  EXPECT_EQ(denied.code, kExitOk) << denied.err;
  Outcome approved = Invoke({"run", scenario, "--policies", Path("policies/ask_variant.pol"),
                          "--responder", "terminal"},
                         "o\n");
  EXPECT_EQ(approved.code, kExitViolation);
  EXPECT_NE(approved.err.find("[ask]"), std::string::npos);
}

TEST(CliTest, ExpandScenarioArgs) {
  EXPECT_EQ(ExpandScenarioArgs({Path("scenarios")}).size(), 12u);
  EXPECT_EQ(ExpandScenarioArgs({Path("scenarios/benign_*.json")}).size(), 4u);
}

TEST(CliBinaryTest, ProcessExitCodes) {
  auto status = [](const std::string& args) {
    std::string command = std::string(WARDEN_CLI_BINARY) + " " + args + " >/dev/null 2>&1";
    int raw = std::system(command.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("policy lint " + Path("policies/default.pol")), 0);
  EXPECT_EQ(status("run " + Path("scenarios/untrusted_agent.json") + " --mode naive"), 1);
  EXPECT_EQ(status("bogus"), 2);
  EXPECT_EQ(status("labels validate /nonexistent.json"), 3);
}

TEST(CliBinaryTest, ServeExitsWhenDone) {
  std::string command = std::string(WARDEN_CLI_BINARY) + " serve --scenario " +
                        Path("scenarios/confused_deputy.json") + " --policies " +
                        Path("policies/ask_variant.pol") +
                        " --bind 127.0.0.1:0 --ask-timeout 0.5 --exit-when-done 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string output;
  char buffer[256];
  while (fgets(buffer, sizeof(buffer), pipe) != nullptr) output += buffer;
  int raw = pclose(pipe);
  EXPECT_TRUE(WIFEXITED(raw));
  EXPECT_EQ(WEXITSTATUS(raw), 0) << output;
  EXPECT_NE(output.find("listening on http://127.0.0.1:"), std::string::npos) << output;
}

}  // namespace
}  // namespace agent_warden::cli
