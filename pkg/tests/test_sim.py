"""Scheduler behavior: determinism, fairness, quiescence, exploration."""

from __future__ import annotations

import pytest

from byzledger.config import parse_config
from byzledger.core import ProcessId
from byzledger.scenarios import builtin_scenario
from byzledger.sim import World, explore_schedules, run_scenario
from byzledger.trace import KINDS


def small(workload=None, **overrides) -> dict:
    raw = {
        "name": "small",
        "max_steps": 5_000,
        "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": [f"server:{i}" for i in range(4)], "f": 1}],
        "workload": workload
        if workload is not None
        else {"client:0": [{"op": "append", "ledger": "main", "payload": "x"}, {"op": "get", "ledger": "main"}]},
    }
    raw.update(overrides)
    return raw


def test_same_seed_same_trace():
    cfg = builtin_scenario("u-n4-f1-wrongget")
    a = run_scenario(cfg, seed=5)
    b = run_scenario(cfg, seed=5)
    assert a.events == b.events
    assert a.outcome == b.outcome and a.steps == b.steps


def test_different_seeds_interleave_differently():
    cfg = builtin_scenario("u-n4-f1")
    assert run_scenario(cfg, seed=5).events != run_scenario(cfg, seed=6).events


def test_run_reaches_quiescence_and_uses_known_event_kinds():
    trace = run_scenario(parse_config(small()), seed=1)
    assert trace.outcome == "quiescent"
    assert {ev.kind for ev in trace.events} <= set(KINDS)
    returns = [ev for ev in trace.events if ev.kind == "return"]
    assert len(returns) == 2  # both workload ops completed


def test_empty_workload_quiesces_immediately():
    trace = run_scenario(parse_config(small(workload={})), seed=1)
    assert trace.outcome == "quiescent" and trace.events == []


def test_tiny_step_budget_truncates():
    trace = run_scenario(parse_config(small(max_steps=5)), seed=1)
    assert trace.outcome == "truncated" and trace.steps == 5


def test_silent_server_does_not_block_quiescence():
    trace = run_scenario(builtin_scenario("u-n4-f1-silent"), seed=2)
    assert trace.outcome == "quiescent"


def test_fairness_factor_env_override(monkeypatch):
    cfg = parse_config(small())
    monkeypatch.setenv("BYZLEDGER_FAIRNESS_FACTOR", "9")
    assert World(cfg).fairness_factor == 9
    monkeypatch.setenv("BYZLEDGER_FAIRNESS_FACTOR", "junk")
    assert World(cfg).fairness_factor == cfg.fairness_factor
    monkeypatch.delenv("BYZLEDGER_FAIRNESS_FACTOR")
    assert World(cfg).fairness_factor == cfg.fairness_factor


@pytest.mark.parametrize("factor", [1, 2])
def test_aggressive_fairness_still_completes(factor, monkeypatch):
    monkeypatch.setenv("BYZLEDGER_FAIRNESS_FACTOR", str(factor))
    trace = run_scenario(parse_config(small()), seed=3)
    assert trace.outcome == "quiescent"


def test_workload_ops_run_sequentially_per_client():
    trace = run_scenario(parse_config(small()), seed=4)
    c0 = ProcessId("client", 0)
    steps = [(ev.kind, ev.step) for ev in trace.events if ev.actor == c0 and ev.kind in ("invoke", "return")]
    kinds = [k for k, _ in steps]
    assert kinds == ["invoke", "return", "invoke", "return"]


def test_trace_embeds_the_scenario():
    import json

    cfg = parse_config(small())
    trace = run_scenario(cfg, seed=1)
    embedded = parse_config(json.loads(trace.config_blob.decode()))
    assert embedded == cfg


def test_explore_is_deterministic_and_distinct():
    cfg = parse_config(small(workload={"client:0": [{"op": "get", "ledger": "main"}]}))
    first = [(choices, tuple(tr.events)) for choices, tr in explore_schedules(cfg, max_runs=40)]
    second = [(choices, tuple(tr.events)) for choices, tr in explore_schedules(cfg, max_runs=40)]
    assert first == second
    assert len({c for c, _ in first}) == len(first)
    assert all(tr for _, tr in first)


def test_explore_exhausts_a_trivial_model():
    cfg = parse_config(small(workload={}))
    schedules = list(explore_schedules(cfg, max_runs=50))
    assert len(schedules) == 1  # nothing is ever enabled, one empty schedule
    assert schedules[0][1].outcome == "quiescent"
