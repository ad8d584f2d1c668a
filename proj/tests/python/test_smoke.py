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

import pathlib

import pytest

import agent_warden

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_kappa_matches_shipped_labels():
    report = agent_warden.kappa(ROOT / "data/injecagent_labels_human.json",
                                ROOT / "data/injecagent_labels_llm.json")
    assert report["overall"] == pytest.approx(0.9456, abs=1e-3)
    assert report["per_attribute"]["object"] == pytest.approx(1.0, abs=1e-4)


def test_canonicalize_is_a_fixpoint():
    text = (ROOT / "policies/default.pol").read_text()
    once = agent_warden.canonicalize(text)
    assert once.startswith("Goal deny\nPath tool:$A -> * -> tool:send_email\n")
    assert agent_warden.canonicalize(once) == once
    assert agent_warden.lint(text) == []


def test_parse_errors_carry_a_code():
    with pytest.raises(agent_warden.WardenError) as info:
        agent_warden.canonicalize('Goal deny\nPath tool:$A\nRule B.action=="READ"\n')
    assert info.value.code == "UnboundVariable"


def test_guarded_run_blocks_rag_poisoning():
    path = ROOT / "scenarios/rag_poisoning_hub.json"
    guarded = agent_warden.run_scenario(path)
    naive = agent_warden.run_scenario(path, mode="naive")
    assert guarded["metrics"]["asr"] == 0.0
    assert guarded["metrics"]["par"] == 1.0
    assert naive["metrics"]["asr"] == 1.0
    assert guarded["transcript"]["rounds"][0]["decisions"][0]["outcome"] == "deny"


def test_bad_mode_is_rejected():
    with pytest.raises(ValueError):
        agent_warden.run_scenario(ROOT / "scenarios/benign_smart_home.json", mode="strict")
