"""Scenario parsing, validation rules, canonical digests."""

from __future__ import annotations

import json
import re

import pytest

from byzledger.config import (
    ConfigError,
    canonical_config_bytes,
    config_digest,
    config_to_dict,
    load_config,
    parse_config,
    validate_config,
)


def minimal(**overrides) -> dict:
    raw = {
        "name": "t",
        "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": [f"server:{i}" for i in range(4)], "f": 1}],
        "workload": {"client:0": [{"op": "get", "ledger": "main"}]},
    }
    raw.update(overrides)
    return raw


def test_parse_and_validate_happy_path():
    cfg = parse_config(minimal())
    assert validate_config(cfg) == []
    assert cfg.ledger("main").f == 1
    assert [str(p) for p in cfg.processes()] == ["client:0", "server:0", "server:1", "server:2", "server:3"]


def test_unknown_top_level_key_rejected():
    with pytest.raises(ConfigError, match="unknown top-level"):
        parse_config(minimal(extra=1))


def test_unknown_ledger_key_rejected():
    raw = minimal()
    raw["ledgers"][0]["replicas"] = 3
    with pytest.raises(ConfigError, match="ledgers\\[0\\]"):
        parse_config(raw)


def test_bad_process_id_is_located():
    raw = minimal()
    raw["workload"] = {"nobody": []}
    with pytest.raises(ConfigError, match="workload\\[nobody\\]"):
        parse_config(raw)


def test_unknown_workload_op_rejected():
    raw = minimal()
    raw["workload"] = {"client:0": [{"op": "erase", "ledger": "main"}]}
    with pytest.raises(ConfigError, match="erase"):
        parse_config(raw)


def test_adversary_needs_a_strategy():
    with pytest.raises(ConfigError, match="strategy"):
        parse_config(minimal(adversaries={"server:0": {}}))


def server_count_rule_cases():
    return [
        ({"servers": [f"server:{i}" for i in range(3)], "f": 1}, "3f\\+1"),
        ({"servers": ["server:0", "server:0", "server:1", "server:2"], "f": 1}, "duplicate"),
        ({"servers": ["client:0", "server:1", "server:2", "server:3"], "f": 1}, "kind 'server'"),
    ]


@pytest.mark.parametrize("patch,needle", server_count_rule_cases())
def test_ledger_shape_rules(patch, needle):
    raw = minimal()
    raw["ledgers"][0].update(patch)
    problems = validate_config(parse_config(raw))
    assert any(re.search(needle, p) for p in problems), problems


def test_unsafe_override_waives_the_size_rule_only():
    raw = minimal(unsafe_override=True)
    raw["ledgers"][0]["servers"] = ["server:0", "server:1", "server:2"]
    assert validate_config(parse_config(raw)) == []
    raw["ledgers"][0]["servers"] = ["server:0", "server:1"]  # below the write quorum
    assert validate_config(parse_config(raw)) != []


def test_byzantine_servers_capped_by_f():
    raw = minimal(
        adversaries={
            "server:0": {"strategy": "server_silent"},
            "server:1": {"strategy": "server_silent"},
        }
    )
    problems = validate_config(parse_config(raw))
    assert any("exceeds f" in p for p in problems)


def test_cosign_ledger_rules():
    raw = minimal()
    raw["ledgers"][0]["protocol"] = "b-bydl"
    problems = validate_config(parse_config(raw))
    assert any("requires t" in p for p in problems)
    raw["ledgers"][0]["t"] = 1
    problems = validate_config(parse_config(raw))
    assert any("requires allowed_clients" in p for p in problems)
    raw["ledgers"][0]["allowed_clients"] = ["client:0", "client:1"]
    problems = validate_config(parse_config(raw))
    assert any("2t+1" in p for p in problems)
    raw["ledgers"][0]["allowed_clients"] = ["client:0", "client:1", "client:2"]
    assert validate_config(parse_config(raw)) == []


def test_byzantine_members_capped_by_t():
    raw = minimal()
    raw["ledgers"][0].update({"protocol": "b-bydl", "t": 1, "allowed_clients": ["client:0", "client:1", "client:2"]})
    raw["adversaries"] = {
        "client:1": {"strategy": "client_partial_send", "ledger": "main"},
        "client:2": {"strategy": "client_partial_send", "ledger": "main"},
    }
    raw["workload"] = {"client:0": [{"op": "get", "ledger": "main"}]}
    problems = validate_config(parse_config(raw))
    assert any("exceeds t" in p for p in problems)


def test_smart_ledger_rules():
    raw = minimal()
    raw["ledgers"][0] = {"name": "main", "protocol": "sbdlo", "servers": ["server:0", "server:1"], "f": 0, "t": 1}
    problems = validate_config(parse_config(raw))
    assert any("2t+1" in p for p in problems)


def test_helper_rules():
    raw = minimal()
    raw["helpers"] = {"ids": ["helper:0", "helper:1"], "t": 1, "ledger": "main"}
    problems = validate_config(parse_config(raw))
    assert any("2t+1" in p for p in problems)
    raw["helpers"] = {"ids": ["helper:0", "helper:1", "helper:2"], "t": 1, "ledger": "nope"}
    problems = validate_config(parse_config(raw))
    assert any("unknown ledger" in p for p in problems)
    raw["helpers"] = {"ids": ["helper:0", "helper:1", "helper:2"], "t": 1, "ledger": "main"}
    assert validate_config(parse_config(raw)) == []


def test_helpers_must_poll_a_plain_ledger():
    raw = minimal()
    raw["ledgers"][0].update({"protocol": "b-bydl", "t": 1, "allowed_clients": ["client:0", "client:1", "client:2"]})
    raw["helpers"] = {"ids": ["helper:0", "helper:1", "helper:2"], "t": 1, "ledger": "main"}
    problems = validate_config(parse_config(raw))
    assert any("u-bydl" in p for p in problems)


def test_strategy_kind_must_match_process_kind():
    raw = minimal(adversaries={"server:0": {"strategy": "client_equivocate", "ledger": "main"}})
    problems = validate_config(parse_config(raw))
    assert any("applies to client" in p for p in problems)


def test_byzantine_process_cannot_take_a_workload():
    raw = minimal(adversaries={"client:0": {"strategy": "client_equivocate", "ledger": "main"}})
    problems = validate_config(parse_config(raw))
    assert any("driven by their strategy" in p for p in problems)


def test_workload_references_must_resolve():
    raw = minimal()
    raw["workload"] = {"client:0": [{"op": "append", "ledger": "ghost", "payload": "x"}]}
    problems = validate_config(parse_config(raw))
    assert any("ghost" in p for p in problems)
    raw["workload"] = {"client:0": [{"op": "aa", "instance": "ghost"}]}
    problems = validate_config(parse_config(raw))
    assert any("unknown instance" in p for p in problems)


def test_aa_party_membership_checked():
    raw = minimal()
    raw["aa_instances"] = [
        {
            "name": "x1",
            "coordination": "main",
            "parties": {
                "client:1": {"ledger": "main", "payload": "a"},
                "client:2": {"ledger": "main", "payload": "b"},
            },
        }
    ]
    raw["workload"] = {"client:0": [{"op": "aa", "instance": "x1"}]}
    problems = validate_config(parse_config(raw))
    assert any("not a party" in p for p in problems)


def test_digest_ignores_formatting_but_not_meaning():
    cfg = parse_config(minimal())
    again = parse_config(json.loads(json.dumps(minimal())))
    assert config_digest(cfg) == config_digest(again)
    changed = parse_config(minimal(seed=2))
    assert config_digest(cfg) != config_digest(changed)


def test_config_round_trips_through_its_canonical_form():
    cfg = parse_config(
        minimal(
            adversaries={"server:0": {"strategy": "server_wrong_get", "payload": "bogus"}},
            aa_instances=[
                {
                    "name": "x1",
                    "coordination": "main",
                    "parties": {
                        "client:0": {"ledger": "main", "payload": "a"},
                        "client:1": {"ledger": "main", "payload": "b"},
                    },
                }
            ],
        )
    )
    rebuilt = parse_config(json.loads(canonical_config_bytes(cfg).decode()))
    assert rebuilt == cfg
    assert config_digest(rebuilt) == config_digest(cfg)
    assert config_to_dict(rebuilt) == config_to_dict(cfg)


def test_load_config_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"name": "x",\n  "ledgers": [}')
    with pytest.raises(ConfigError, match="broken.json:2"):
        load_config(str(path))


def test_load_config_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/scenario.json")
