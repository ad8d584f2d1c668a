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

#include <glob.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "agent_warden/decision_engine.h"
#include "agent_warden/error.h"
#include "agent_warden/harness.h"
#include "agent_warden/labels.h"
#include "agent_warden/policy.h"
#include "agent_warden/serve.h"
#include "httplib.h"
#include "json.hpp"
#include "text_util.h"

namespace agent_warden::cli {

using nlohmann::json;

namespace {

// Output schema version of `--format json` reports.
constexpr int kReportVersion = 1;

constexpr std::string_view kConfigKeys[] = {"mode",        "policies", "responder", "format",
                                            "ask_timeout", "bind",     "scenario"};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<std::string> Env(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

// Fills options the command line left unset: environment first, then the
// config file.
class Settings {
 public:
  void LoadConfig(const std::string& flag_path) {
    std::optional<std::string> path =
        flag_path.empty() ? Env("AGENT_WARDEN_CONFIG") : std::optional(flag_path);
    if (!path) return;
    json doc = json::parse(internal::ReadFile(*path), nullptr, false);
    if (!doc.is_object()) {
      throw Error(ErrorCode::kSchemaError, *path + ": config must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
      if (std::find(std::begin(kConfigKeys), std::end(kConfigKeys), key) ==
          std::end(kConfigKeys)) {
        throw Error(ErrorCode::kSchemaError, *path + ": unknown config key '" + key + "'");
      }
      if (value.is_string()) {
        config_[key] = value.get<std::string>();
      } else if (value.is_number()) {
        config_[key] = value.dump();
      } else {
        throw Error(ErrorCode::kSchemaError, *path + ": '" + key + "' must be a string or number");
      }
    }
  }

  void Fill(const CLI::Option* option, std::string& target, const std::string& key) const {
    if (option->count() > 0) return;
    if (std::optional<std::string> env = Env("AGENT_WARDEN_" + internal::ToUpper(key))) {
      target = *env;
      return;
    }
    auto it = config_.find(key);
    if (it != config_.end()) target = it->second;
  }

 private:
  std::map<std::string, std::string> config_;
};

void Require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

RunMode ParseMode(const std::string& text) {
  std::string mode = internal::ToLower(text);
  if (mode == "naive") return RunMode::kNaive;
  if (mode == "guarded") return RunMode::kGuarded;
  throw UsageError("--mode must be naive or guarded, got '" + text + "'");
}

std::chrono::milliseconds ParseSeconds(const std::string& text, const char* flag) {
  try {
    size_t used = 0;
    double seconds = std::stod(text, &used);
    if (used == text.size() && seconds > 0) {
      return std::chrono::milliseconds(static_cast<int64_t>(seconds * 1000));
    }
  } catch (const std::exception&) {
  }
  throw UsageError(std::string(flag) + " must be a positive number of seconds");
}

bool JsonFormat(const std::string& format) {
  if (format == "json") return true;
  if (format == "text") return false;
  throw UsageError("--format must be text or json");
}

std::pair<std::string, int> ParseBind(const std::string& bind) {
  size_t colon = bind.rfind(':');
  Require(colon != std::string::npos && colon > 0, "--bind must be host:port");
  int port = -1;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
  }
  Require(port >= 0 && port <= 65535, "--bind port must be 0-65535");
  return {bind.substr(0, colon), port};
}

// An httplib server listening on a background thread.
class ServerThread {
 public:
  ServerThread(ServeState& state, const std::string& bind) {
    auto [host, port] = ParseBind(bind);
    RegisterRoutes(server_, state);
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      port_ = server_.bind_to_port(host, port) ? port : -1;
    }
    if (port_ < 0) throw Error(ErrorCode::kIoError, "cannot bind " + bind);
    host_ = host;
    thread_ = std::thread([this] { server_.listen_after_bind(); });
  }
  ~ServerThread() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://" + host_ + ":" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::string host_;
  int port_ = -1;
  std::thread thread_;
};

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

// ---------------------------------------------------------------------------
// policy lint

int PolicyLint(const std::string& pack, bool as_json, std::ostream& out) {
  std::vector<Policy> policies = LoadPolicyPack(pack, PolicyOrigin::kUserFile);
  std::vector<Diagnostic> diagnostics = LintPolicies(policies);
  if (as_json) {
    json list = json::array();
    for (const Diagnostic& d : diagnostics) {
      list.push_back({{"code", DiagnosticName(d.code)}, {"message", d.message}});
    }
    out << json{{"version", kReportVersion},
                {"pack", pack},
                {"policies", policies.size()},
                {"diagnostics", list}}
               .dump(2)
        << "\n";
  } else {
    for (const Diagnostic& d : diagnostics) {
      out << pack << ": warning: " << DiagnosticName(d.code) << ": " << d.message << "\n";
    }
    out << pack << ": " << policies.size() << " policies, " << diagnostics.size()
        << " diagnostics\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run

struct RunSettings {
  RunMode mode = RunMode::kGuarded;
  std::optional<PolicyDB> policies;
  std::string responder = "scripted";
  std::chrono::milliseconds ask_timeout{120000};
  bool flatten_memory = false;
  std::string bind;
  bool as_json = false;
};

std::string Fixed(double value) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << value;
  return s.str();
}

void PrintRound(const RoundTranscript& rt, std::ostream& out) {
  out << "  " << rt.round_id << (rt.setup ? " [setup]" : rt.adversarial ? " [attack]" : "")
      << ": " << rt.query << "\n";
  size_t next_decision = 0;
  for (const TranscriptEvent& e : rt.events) {
    switch (e.type) {
      case TranscriptEvent::Type::kInvoke: {
        std::string verdict = e.executed ? "executed" : "blocked";
        out << "    " << e.agent << " -> " << e.subject << e.args.dump() << " " << verdict;
        // Decisions are recorded in the same order as gated invocations.
        if (next_decision < rt.decisions.size()) {
          const DecisionRecord& d = rt.decisions[next_decision++];
          out << " (" << GoalName(d.outcome);
          if (d.final) out << " -> " << GoalName(*d.final);
          if (d.timed_out) out << ", timed out";
          out << ")";
        }
        out << "\n";
        break;
      }
      case TranscriptEvent::Type::kMessage:
        out << "    " << e.agent << " => " << e.subject << ": " << e.text << "\n";
        break;
      case TranscriptEvent::Type::kRetrieve:
        out << "    " << e.agent << " <- " << e.subject << "\n";
        break;
      case TranscriptEvent::Type::kReply:
        out << "    " << e.agent << ": " << e.text << "\n";
        break;
      case TranscriptEvent::Type::kReturn:
        break;
    }
  }
}

json ViolationToJson(const Violation& v) {
  return {{"round_id", v.round_id},
          {"kind", v.message ? "message" : "invocation"},
          {"agent", v.agent},
          {"subject", v.subject},
          {"args", v.args},
          {"executed", v.executed}};
}

int RunScenarios(const std::vector<std::filesystem::path>& paths, const RunSettings& settings,
                 std::istream& in, std::ostream& out, std::ostream& err) {
  std::unique_ptr<ScriptedResponder> scripted;
  std::unique_ptr<TerminalResponder> terminal;
  std::unique_ptr<ServeState> remote;
  std::unique_ptr<ServerThread> server;
  RunOptions options;
  options.mode = settings.mode;
  options.policies = settings.policies;
  options.ask_timeout = settings.ask_timeout;
  options.flatten_memory = settings.flatten_memory;
  if (settings.responder == "terminal") {
    terminal = std::make_unique<TerminalResponder>(in, err);
    options.responder = terminal.get();
  } else if (settings.responder == "remote") {
    remote = std::make_unique<ServeState>();
    server = std::make_unique<ServerThread>(*remote, settings.bind);
    err << "answer pending decisions at " << server->url() << "/api/pending\n";
    options.responder = &remote->responder();
    options.observer = remote.get();
  } else if (settings.responder != "scripted") {
    throw UsageError("--responder must be scripted, terminal or remote");
  }

  std::vector<Scenario> scenarios;
  for (const auto& path : paths) scenarios.push_back(LoadScenario(path));
  std::vector<RunResult> results;
  for (const Scenario& s : scenarios) results.push_back(RunScenario(s, options));

  std::vector<const Transcript*> transcripts;
  std::vector<const Scenario*> scenario_ptrs;
  for (size_t i = 0; i < results.size(); ++i) {
    transcripts.push_back(&results[i].transcript);
    scenario_ptrs.push_back(&scenarios[i]);
  }
  Metrics total = ComputeMetrics(transcripts, scenario_ptrs);

  if (settings.as_json) {
    json list = json::array();
    for (size_t i = 0; i < results.size(); ++i) {
      json violations = json::array();
      for (const Violation& v : results[i].violations) violations.push_back(ViolationToJson(v));
      list.push_back({{"name", scenarios[i].name},
                      {"vector", scenarios[i].vector},
                      {"metrics", results[i].metrics.ToJson()},
                      {"violations", violations},
                      {"transcript", results[i].transcript.ToJson()}});
    }
    out << json{{"version", kReportVersion},
                {"mode", RunModeName(settings.mode)},
                {"scenarios", list},
                {"metrics", total.ToJson()}}
               .dump(2)
        << "\n";
  } else {
    for (size_t i = 0; i < results.size(); ++i) {
      out << "scenario " << scenarios[i].name << " (" << RunModeName(settings.mode) << ")\n";
      for (const RoundTranscript& rt : results[i].transcript.rounds) PrintRound(rt, out);
    }
    out << "\n"
        << std::left << std::setw(32) << "scenario" << std::setw(20) << "vector" << std::right
        << std::setw(7) << "attack" << std::setw(7) << "benign" << std::setw(6) << "ASR"
        << std::setw(6) << "PAR" << std::setw(6) << "FPR" << std::setw(9) << "correct"
        << "\n";
    auto row = [&out](const std::string& name, const std::string& vector, const Metrics& m) {
      out << std::left << std::setw(32) << name << std::setw(20) << vector << std::right
          << std::setw(7) << m.attack_rounds << std::setw(7) << m.benign_rounds << std::setw(6)
          << Fixed(m.asr) << std::setw(6) << Fixed(m.par) << std::setw(6) << Fixed(m.fpr)
          << std::setw(9) << Fixed(m.correctness) << "\n";
    };
    for (size_t i = 0; i < results.size(); ++i) {
      row(scenarios[i].name, scenarios[i].vector, results[i].metrics);
    }
    if (results.size() > 1) row("TOTAL", "", total);
    if (total.expectation_failures > 0) {
      out << total.expectation_failures << " round(s) did not match expected decisions\n";
    }
  }
  return total.executed_violations > 0 ? kExitViolation : kExitOk;
}

// ---------------------------------------------------------------------------
// labels

int LabelsKappa(const std::string& a, const std::string& b, bool as_json, std::ostream& out) {
  KappaReport report = ComputeKappaReport(LabelSet::Load(a), LabelSet::Load(b));
  if (as_json) {
    json doc = KappaReportToJson(report);
    doc["version"] = kReportVersion;
    out << doc.dump(2) << "\n";
    return kExitOk;
  }
  out << std::fixed << std::setprecision(4);
  for (Attribute attribute : kAllAttributes) {
    std::string name(AttributeName(attribute));
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    out << std::left << std::setw(12) << name << report.per_attribute.at(attribute) << "\n";
  }
  out << std::left << std::setw(12) << "Overall" << report.overall << "\n";
  out << report.item_count << " tools\n";
  return kExitOk;
}

int LabelsValidate(const std::string& path, bool as_json, std::ostream& out) {
  LabelSet set = LabelSet::Load(path);
  std::map<std::string, size_t> by_kind;
  for (const auto& [name, entry] : set.entries()) ++by_kind[std::string(KindName(entry.label.kind))];
  if (as_json) {
    out << json{{"version", kReportVersion}, {"subjects", set.size()}, {"by_kind", by_kind}}.dump(2)
        << "\n";
  } else {
    out << path << ": " << set.size() << " valid subjects";
    for (const auto& [kind, n] : by_kind) out << ", " << n << " " << kind;
    out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// serve

int Serve(const Scenario& scenario, RunOptions options, const std::string& bind, int repeat,
          bool exit_when_done, std::ostream& out) {
  ServeState state;
  ServerThread server(state, bind);
  out << "listening on " << server.url() << "\n" << std::flush;
  options.responder = &state.responder();
  options.observer = &state;
  for (int r = 0; r < repeat; ++r) {
    for (size_t i = 0; i < scenario.rounds.size(); ++i) options.round_order.push_back(i);
  }
  RunResult result = RunScenario(scenario, options);
  out << "scenario " << scenario.name << " finished: " << state.log().size()
      << " decisions, ASR " << Fixed(result.metrics.asr) << "\n"
      << std::flush;
  if (!exit_when_done) {
    std::signal(SIGINT, OnSignal);
    std::signal(SIGTERM, OnSignal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  return result.metrics.executed_violations > 0 ? kExitViolation : kExitOk;
}

}  // namespace

std::vector<std::filesystem::path> ExpandScenarioArgs(const std::vector<std::string>& args) {
  std::set<std::filesystem::path> found;
  for (const std::string& arg : args) {
    size_t before = found.size();
    if (std::filesystem::is_directory(arg)) {
      for (const auto& entry : std::filesystem::directory_iterator(arg)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
          found.insert(entry.path());
        }
      }
    } else if (arg.find_first_of("*?[") != std::string::npos) {
      glob_t matches{};
      if (glob(arg.c_str(), 0, nullptr, &matches) == 0) {
        for (size_t i = 0; i < matches.gl_pathc; ++i) found.insert(matches.gl_pathv[i]);
      }
      globfree(&matches);
    } else if (std::filesystem::is_regular_file(arg)) {
      found.insert(arg);
    }
    if (found.size() == before) throw Error(ErrorCode::kIoError, "no scenario matches '" + arg + "'");
  }
  return {found.begin(), found.end()};
}

int Main(int argc, const char* const* argv, std::istream& in, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"Mandatory access control for LLM agent systems", "agent-warden"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (or AGENT_WARDEN_CONFIG)");
  std::string format = "text";
  CLI::Option* format_opt = app.add_option("--format", format, "text or json")->capture_default_str();

  // policy lint
  CLI::App* policy = app.add_subcommand("policy", "Policy pack tools");
  policy->require_subcommand(1);
  CLI::App* lint = policy->add_subcommand("lint", "Parse and lint a policy pack");
  std::string lint_pack;
  lint->add_option("pack", lint_pack, "Policy pack file")->required();

  // run
  CLI::App* run = app.add_subcommand("run", "Run scenarios and report metrics");
  std::vector<std::string> run_paths;
  run->add_option("scenarios", run_paths, "Scenario files, directories or globs")->required();
  std::string mode = "guarded", policies, responder = "scripted", ask_timeout = "120",
              bind = "127.0.0.1:8765";
  CLI::Option* mode_opt = run->add_option("--mode", mode, "naive or guarded");
  CLI::Option* policies_opt = run->add_option("--policies", policies, "Policy pack override");
  CLI::Option* responder_opt =
      run->add_option("--responder", responder, "scripted, terminal or remote");
  CLI::Option* timeout_opt = run->add_option("--ask-timeout", ask_timeout, "Seconds per ASK");
  CLI::Option* bind_opt = run->add_option("--bind", bind, "Address for --responder remote");
  bool flatten = false;
  run->add_flag("--flatten-memory", flatten, "Replay remembered events instead of seeding");

  // labels
  CLI::App* labels = app.add_subcommand("labels", "Label files");
  labels->require_subcommand(1);
  CLI::App* kappa = labels->add_subcommand("kappa", "Cohen's kappa between two label files");
  std::string kappa_a, kappa_b;
  kappa->add_option("a", kappa_a, "First label file")->required();
  kappa->add_option("b", kappa_b, "Second label file")->required();
  CLI::App* validate = labels->add_subcommand("validate", "Validate a label file");
  std::string validate_path;
  validate->add_option("file", validate_path, "Label file")->required();

  // serve
  CLI::App* serve = app.add_subcommand("serve", "Run a scenario and serve ASK decisions over HTTP");
  std::string serve_scenario, serve_policies, serve_timeout = "120",
              serve_bind = "127.0.0.1:8765";
  CLI::Option* serve_scenario_opt = serve->add_option("--scenario", serve_scenario, "Scenario file");
  CLI::Option* serve_policies_opt = serve->add_option("--policies", serve_policies, "Policy pack");
  CLI::Option* serve_timeout_opt =
      serve->add_option("--ask-timeout", serve_timeout, "Seconds before an ASK is denied");
  CLI::Option* serve_bind_opt = serve->add_option("--bind", serve_bind, "host:port");
  int repeat = 1;
  serve->add_option("--repeat", repeat, "Run the scenario's rounds this many times")
      ->check(CLI::PositiveNumber);
  bool exit_when_done = false;
  serve->add_flag("--exit-when-done", exit_when_done, "Stop once the scenario finishes");

  // Subcommand options may also follow the subcommand name.
  for (CLI::App* sub : {lint, run, kappa, validate, serve}) {
    sub->add_option("--format", format, "text or json");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    Settings settings;
    settings.LoadConfig(config_path);
    bool format_given = format_opt->count() > 0;
    for (CLI::App* sub : {lint, run, kappa, validate, serve}) {
      format_given = format_given || sub->count("--format") > 0;
    }
    if (!format_given) settings.Fill(format_opt, format, "format");
    bool as_json = JsonFormat(format);

    if (*lint) return PolicyLint(lint_pack, as_json, out);
    if (*kappa) return LabelsKappa(kappa_a, kappa_b, as_json, out);
    if (*validate) return LabelsValidate(validate_path, as_json, out);

    if (*run) {
      settings.Fill(mode_opt, mode, "mode");
      settings.Fill(policies_opt, policies, "policies");
      settings.Fill(responder_opt, responder, "responder");
      settings.Fill(timeout_opt, ask_timeout, "ask_timeout");
      settings.Fill(bind_opt, bind, "bind");
      RunSettings rs;
      rs.mode = ParseMode(mode);
      if (!policies.empty()) rs.policies = PolicyDB(LoadPolicyPack(policies, PolicyOrigin::kUserFile));
      rs.responder = internal::ToLower(responder);
      rs.ask_timeout = ParseSeconds(ask_timeout, "--ask-timeout");
      rs.flatten_memory = flatten;
      rs.bind = bind;
      rs.as_json = as_json;
      return RunScenarios(ExpandScenarioArgs(run_paths), rs, in, out, err);
    }

    if (*serve) {
      settings.Fill(serve_scenario_opt, serve_scenario, "scenario");
      settings.Fill(serve_policies_opt, serve_policies, "policies");
      settings.Fill(serve_timeout_opt, serve_timeout, "ask_timeout");
      settings.Fill(serve_bind_opt, serve_bind, "bind");
      Require(!serve_scenario.empty(), "serve needs --scenario");
      Scenario scenario = LoadScenario(serve_scenario);
      RunOptions options;
      options.mode = RunMode::kGuarded;
      if (!serve_policies.empty()) {
        options.policies = PolicyDB(LoadPolicyPack(serve_policies, PolicyOrigin::kUserFile));
      }
      options.ask_timeout = ParseSeconds(serve_timeout, "--ask-timeout");
      return Serve(scenario, std::move(options), serve_bind, repeat, exit_when_done, out);
    }
  } catch (const UsageError& e) {
    err << "agent-warden: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "agent-warden: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "agent-warden: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace agent_warden::cli
