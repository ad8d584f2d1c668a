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

// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the agent_warden package.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "agent_warden/error.h"
#include "agent_warden/harness.h"
#include "agent_warden/labels.h"
#include "agent_warden/policy.h"

namespace py = pybind11;
using nlohmann::json;

namespace agent_warden {
namespace {

std::string Kappa(const std::string& a, const std::string& b) {
  return KappaReportToJson(ComputeKappaReport(LabelSet::Load(a), LabelSet::Load(b))).dump();
}

std::string Canonicalize(const std::string& text) {
  std::string out;
  for (const Policy& policy : SortPolicies(ParsePolicyPack(text))) {
    if (!out.empty()) out += "\n";
    out += RenderPolicy(policy);
  }
  return out;
}

std::string Lint(const std::string& text) {
  std::vector<Policy> policies = ParsePolicyPack(text);
  json out = json::array();
  for (const Diagnostic& d : LintPolicies(policies)) {
    out.push_back({{"code", DiagnosticName(d.code)},
                   {"policy_index", d.policy_index},
                   {"message", d.message}});
  }
  return out.dump();
}

std::string Run(const std::string& scenario_path, const std::string& mode,
                const std::optional<std::string>& policies, bool flatten_memory) {
  Scenario scenario = LoadScenario(scenario_path);
  RunOptions options;
  if (mode == "naive") {
    options.mode = RunMode::kNaive;
  } else if (mode == "guarded") {
    options.mode = RunMode::kGuarded;
  } else {
    throw py::value_error("mode must be 'naive' or 'guarded'");
  }
  if (policies) options.policies = PolicyDB(LoadPolicyPack(*policies));
  options.flatten_memory = flatten_memory;
  RunResult result;
  {
    py::gil_scoped_release release;
    result = RunScenario(scenario, options);
  }
  json violations = json::array();
  for (const Violation& v : result.violations) {
    violations.push_back({{"round_id", v.round_id},
                          {"kind", v.message ? "message" : "invocation"},
                          {"agent", v.agent},
                          {"subject", v.subject},
                          {"args", v.args},
                          {"executed", v.executed}});
  }
  return json{{"name", scenario.name},
              {"vector", scenario.vector},
              {"metrics", result.metrics.ToJson()},
              {"violations", violations},
              {"transcript", result.transcript.ToJson()}}
      .dump();
}

}  // namespace
}  // namespace agent_warden

PYBIND11_MODULE(_agent_warden, m) {
  using namespace agent_warden;
  m.doc() = "Information-flow guard for LLM agent systems";

  static py::exception<Error> error(m, "WardenError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::handle(error.ptr())(py::str(e.what()));
      instance.attr("code") = py::str(std::string(ErrorCodeName(e.code())));
      PyErr_SetObject(error.ptr(), instance.ptr());
    }
  });

  m.def("kappa_json", &Kappa, py::arg("a"), py::arg("b"));
  m.def("canonicalize", &Canonicalize, py::arg("text"),
        "Parses a policy pack and renders it canonically in evaluation order.");
  m.def("lint_json", &Lint, py::arg("text"));
  m.def("run_json", &Run, py::arg("scenario"), py::arg("mode") = "guarded",
        py::arg("policies") = std::nullopt, py::arg("flatten_memory") = false);
}
