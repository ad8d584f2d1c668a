# Copyright 2026 The Agent Warden Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the agent_warden policy engine and scenario harness."""

import json
import os

from agent_warden._agent_warden import WardenError, canonicalize
from agent_warden import _agent_warden as _core

__all__ = ["WardenError", "canonicalize", "kappa", "lint", "run_scenario"]


def kappa(labels_a, labels_b):
    """Cohen's kappa per attribute and pooled between two label files."""
    return json.loads(_core.kappa_json(os.fspath(labels_a), os.fspath(labels_b)))


def lint(text):
    """Lint diagnostics for a policy pack, as a list of dicts."""
    return json.loads(_core.lint_json(text))


def run_scenario(path, mode="guarded", policies=None, flatten_memory=False):
    """Runs one scenario file and returns metrics, violations and transcript."""
    if policies is not None:
        policies = os.fspath(policies)
    return json.loads(
        _core.run_json(os.fspath(path), mode, policies, flatten_memory))
