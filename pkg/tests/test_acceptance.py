"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line per
criterion, including expected vs observed values and the runtime budget.
"""

import json

import numpy as np
import pytest

from qdilemma import acceptance, channel
from qdilemma.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", [n for n, *_ in CRITERIA], ids=[name for _, name, *_ in CRITERIA])
def test_criterion(number):
    r = run_criterion(number)
    print(r.line())
    assert r.passed, r.line()


def test_results_are_json_serializable():
    r = run_criterion(9)
    doc = json.loads(json.dumps(r.as_dict()))
    assert doc["number"] == 9
    # the printed general and three-parameter formulas are reported, not gated
    families = {d["family"] for d in doc["details"]["discrepancy_report"]}
    assert families == {"2p_general", "3p"}


def test_channel_sign_mutation_is_caught(monkeypatch):
    eye = np.eye(4)
    jz, jz2 = channel.JZ, channel.JZ @ channel.JZ

    def flipped(gamma):
        return 0.5 * gamma * (-2.0 * np.kron(jz, jz.T) - np.kron(jz2, eye) - np.kron(eye, jz2.T))

    monkeypatch.setattr(channel, "dephasing_superoperator", flipped)
    r = run_criterion(8)
    print(r.line())
    assert not r.passed


def test_state_mutation_is_caught(monkeypatch):
    # dropping the coherence of the shared state must break the Q(x)Q law
    monkeypatch.setattr(channel, "initial_state_matrix",
                        lambda mu: 0.5 * np.diag([1.0, 0.0, 0.0, 1.0]).astype(complex))
    assert not run_criterion(1).passed


def test_crashing_check_is_a_failure(monkeypatch):
    def boom():
        raise RuntimeError("kaput")

    stub = tuple((n, name, boom if n == 2 else fn, b) for n, name, fn, b in CRITERIA)
    monkeypatch.setattr(acceptance, "CRITERIA", stub)
    r = run_criterion(2)
    assert not r.passed
    assert "RuntimeError" in r.observed


def test_budget_overrun_is_a_failure(monkeypatch):
    stub = tuple((n, name, fn, -1.0 if n == 2 else b) for n, name, fn, b in CRITERIA)
    monkeypatch.setattr(acceptance, "CRITERIA", stub)
    assert not run_criterion(2).passed
