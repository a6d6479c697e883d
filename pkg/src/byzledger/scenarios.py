"""Built-in scenario library.

Covers the protocol matrix: plain ledgers under each server fault, the
co-signing ledger with blocked and successful coalitions, both atomic
append mechanisms in their honest, one-sided, and attacked forms, and a
three-party exchange. Builders return validated configurations; they are
also the reference examples for the JSON scenario format.
"""

from __future__ import annotations

from .config import ScenarioConfig, parse_config


def _client_ops(client: int, ledger: str, rounds: int) -> list[dict]:
    ops: list[dict] = []
    for i in range(rounds):
        ops.append({"op": "append", "ledger": ledger, "payload": f"c{client}-{i}"})
        ops.append({"op": "get", "ledger": ledger})
    return ops


def u_sweep(n: int, f: int, fault: str | None = None) -> ScenarioConfig:
    """Plain ledger, 3 clients, 3 append/get rounds each, optional server fault on f replicas."""
    servers = [f"server:{i}" for i in range(n)]
    adversaries = {}
    for i in range(f if fault else 0):
        if fault == "silent":
            adversaries[f"server:{i}"] = {"strategy": "server_silent"}
        elif fault == "wrong_get":
            adversaries[f"server:{i}"] = {"strategy": "server_wrong_get", "payload": f"bogus-{i}"}
        elif fault == "no_echo":
            adversaries[f"server:{i}"] = {"strategy": "server_no_echo"}
        elif fault == "spurious_echo":
            adversaries[f"server:{i}"] = {"strategy": "server_spurious_echo", "ledger": "main", "payload": f"spur-{i}"}
        else:
            raise ValueError(f"unknown fault {fault!r}")
    suffix = f"-{fault.replace('_', '')}" if fault else ""
    return parse_config(
        {
            "name": f"u-n{n}-f{f}{suffix}",
            "max_steps": 30_000 if n <= 4 else 60_000,
            "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": servers, "f": f}],
            "adversaries": adversaries,
            "workload": {f"client:{c}": _client_ops(c, "main", 3) for c in range(3)},
        }
    )


def effective_witness() -> ScenarioConfig:
    """A faulty client undersends an append; a faulty server supplies the missing echo.

    The record lands in every correct replica although no append completed,
    which is exactly what the effective-append detector must report.
    """
    return parse_config(
        {
            "name": "u-effective-witness",
            "max_steps": 30_000,
            "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": [f"server:{i}" for i in range(4)], "f": 1}],
            "adversaries": {
                "client:9": {
                    "strategy": "client_partial_send",
                    "ledger": "main",
                    "payload": "sneak",
                    "targets": ["server:1"],
                },
                "server:0": {
                    "strategy": "server_spurious_echo",
                    "ledger": "main",
                    "claimed_client": "client:9",
                    "counter": 1,
                    "payload": "sneak",
                },
            },
            "workload": {
                "client:0": _client_ops(0, "main", 2) + [{"op": "get", "ledger": "main"}],
                "client:1": _client_ops(1, "main", 2),
            },
        }
    )


def u_equivocate() -> ScenarioConfig:
    """A faulty client sends two different records under one tag."""
    return parse_config(
        {
            "name": "u-equivocate",
            "max_steps": 30_000,
            "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": [f"server:{i}" for i in range(4)], "f": 1}],
            "adversaries": {
                "client:9": {"strategy": "client_equivocate", "ledger": "main", "payload_a": "left", "payload_b": "right"}
            },
            "workload": {f"client:{c}": _client_ops(c, "main", 2) for c in range(2)},
        }
    )


_B_LEDGER = {
    "name": "main",
    "protocol": "b-bydl",
    "servers": [f"server:{i}" for i in range(4)],
    "f": 1,
    "t": 2,
    "allowed_clients": [f"client:{i}" for i in range(5)],
}

# On a co-signing ledger an append only completes once t+1 distinct members
# request the same record, so correct workloads there must co-sign jointly;
# a solo append would wait forever by design, which is not a liveness bug.
_JOINT = {"op": "append", "ledger": "main", "payload": "joint", "creator": "client:0"}
_GET = {"op": "get", "ledger": "main"}


def _fabricating_coalition() -> dict:
    """Faulty members 3 and 4 (exactly t of them) both push one record under member 3's name."""
    return {
        f"client:{i}": {
            "strategy": "client_partial_send",
            "ledger": "main",
            "payload": "fabricated",
            "creator": "client:3",
            "targets": [f"server:{i}" for i in range(4)],
        }
        for i in (3, 4)
    }


def b_blocked() -> ScenarioConfig:
    """Only t faulty members co-sign the fabricated record: it must never land.

    The three correct members meanwhile co-sign an ordinary record of their
    own, so reads return substance rather than trivially empty sequences.
    """
    return parse_config(
        {
            "name": "b-n4-blocked",
            "max_steps": 30_000,
            "ledgers": [_B_LEDGER],
            "adversaries": _fabricating_coalition(),
            "workload": {f"client:{c}": [_JOINT, _GET] for c in range(3)},
        }
    )


def b_cosigned() -> ScenarioConfig:
    """t faulty co-signers plus one correct member: the fabricated record lands everywhere."""
    return parse_config(
        {
            "name": "b-n4-cosigned",
            "max_steps": 30_000,
            "ledgers": [_B_LEDGER],
            "adversaries": _fabricating_coalition(),
            "workload": {
                "client:0": [_JOINT, _GET],
                "client:1": [_JOINT, _GET],
                "client:2": [
                    {"op": "append", "ledger": "main", "payload": "fabricated", "creator": "client:3"},
                    _JOINT,
                    _GET,
                ],
            },
        }
    )


def b_non_member() -> ScenarioConfig:
    """An outsider tries to append to the membership-guarded ledger."""
    return parse_config(
        {
            "name": "b-non-member",
            "max_steps": 30_000,
            "ledgers": [_B_LEDGER],
            "adversaries": {"client:9": {"strategy": "client_non_member", "ledger": "main", "payload": "outsider"}},
            "workload": {f"client:{c}": [_JOINT, _GET] for c in range(3)},
        }
    )


def _smart_base(parties: dict[str, tuple[str, str]], instance: str, posting: list[str], byz: dict | None = None) -> dict:
    """Shared scaffolding for the smart-coordination scenarios."""
    base_names = sorted({ledger for ledger, _ in parties.values()})
    sbdlo_servers = [f"server:{i}" for i in (10, 11, 12)]
    base_servers = [f"server:{i}" for i in range(4)]
    ledgers = [{"name": "coord", "protocol": "sbdlo", "servers": sbdlo_servers, "f": 1, "t": 1}]
    for bn in base_names:
        ledgers.append(
            {
                "name": bn,
                "protocol": "b-bydl",
                "servers": base_servers,
                "f": 1,
                "t": 1,
                "allowed_clients": sbdlo_servers,
            }
        )
    return {
        "name": "",
        "max_steps": 60_000,
        "ledgers": ledgers,
        "adversaries": byz or {},
        "workload": {p: [{"op": "aa", "instance": instance}] for p in posting},
        "aa_instances": [
            {
                "name": instance,
                "coordination": "coord",
                "parties": {p: {"ledger": ledger, "payload": payload} for p, (ledger, payload) in parties.items()},
            }
        ],
    }


_PAIR = {"client:0": ("base-p", "pay-p"), "client:1": ("base-q", "pay-q")}


def aa_smart_both() -> ScenarioConfig:
    cfg = _smart_base(_PAIR, "x1", ["client:0", "client:1"])
    cfg["name"] = "aa-smart-both"
    return parse_config(cfg)


def aa_smart_one_sided() -> ScenarioConfig:
    cfg = _smart_base(_PAIR, "x1", ["client:0"])
    cfg["name"] = "aa-smart-one-sided"
    return parse_config(cfg)


def aa_smart_half_append() -> ScenarioConfig:
    cfg = _smart_base(_PAIR, "x1", ["client:0"], byz={"server:12": {"strategy": "server_half_append"}})
    cfg["name"] = "aa-smart-half-append"
    return parse_config(cfg)


_TRIPLE = {
    "client:0": ("base-a", "pay-a"),
    "client:1": ("base-b", "pay-b"),
    "client:2": ("base-c", "pay-c"),
}


def aa_smart_k3() -> ScenarioConfig:
    cfg = _smart_base(_TRIPLE, "x3", ["client:0", "client:1", "client:2"])
    cfg["name"] = "aa-smart-k3"
    return parse_config(cfg)


def aa_smart_k3_silent() -> ScenarioConfig:
    cfg = _smart_base(_TRIPLE, "x3", ["client:0", "client:1"])
    cfg["name"] = "aa-smart-k3-silent"
    return parse_config(cfg)


def _helper_base(posting: list[str], byz: dict | None = None) -> dict:
    base_servers = [f"server:{i}" for i in range(4)]
    helpers = [f"helper:{i}" for i in range(3)]
    ledgers = [{"name": "coord", "protocol": "u-bydl", "servers": base_servers, "f": 1}]
    for bn in ("base-p", "base-q"):
        ledgers.append(
            {
                "name": bn,
                "protocol": "b-bydl",
                "servers": base_servers,
                "f": 1,
                "t": 1,
                "allowed_clients": helpers,
            }
        )
    return {
        "name": "",
        "max_steps": 80_000,
        "ledgers": ledgers,
        "helpers": {"ids": helpers, "t": 1, "ledger": "coord", "poll_period": 10},
        "adversaries": byz or {},
        "workload": {p: [{"op": "aa", "instance": "x1"}] for p in posting},
        "aa_instances": [
            {
                "name": "x1",
                "coordination": "coord",
                "parties": {p: {"ledger": ledger, "payload": payload} for p, (ledger, payload) in _PAIR.items()},
            }
        ],
    }


def aa_helper_both() -> ScenarioConfig:
    cfg = _helper_base(["client:0", "client:1"])
    cfg["name"] = "aa-helper-both"
    return parse_config(cfg)


def aa_helper_one_sided() -> ScenarioConfig:
    cfg = _helper_base(["client:0"])
    cfg["name"] = "aa-helper-one-sided"
    return parse_config(cfg)


def aa_helper_half_append() -> ScenarioConfig:
    cfg = _helper_base(["client:0"], byz={"helper:2": {"strategy": "helper_half_append"}})
    cfg["name"] = "aa-helper-half-append"
    return parse_config(cfg)


BUILTIN_BUILDERS = {
    "u-n4-f1": lambda: u_sweep(4, 1),
    "u-n4-f1-silent": lambda: u_sweep(4, 1, "silent"),
    "u-n4-f1-wrongget": lambda: u_sweep(4, 1, "wrong_get"),
    "u-n4-f1-noecho": lambda: u_sweep(4, 1, "no_echo"),
    "u-n4-f1-spuriousecho": lambda: u_sweep(4, 1, "spurious_echo"),
    "u-n7-f2": lambda: u_sweep(7, 2),
    "u-effective-witness": effective_witness,
    "u-equivocate": u_equivocate,
    "b-n4-blocked": b_blocked,
    "b-n4-cosigned": b_cosigned,
    "b-non-member": b_non_member,
    "aa-smart-both": aa_smart_both,
    "aa-smart-one-sided": aa_smart_one_sided,
    "aa-smart-half-append": aa_smart_half_append,
    "aa-smart-k3": aa_smart_k3,
    "aa-smart-k3-silent": aa_smart_k3_silent,
    "aa-helper-both": aa_helper_both,
    "aa-helper-one-sided": aa_helper_one_sided,
    "aa-helper-half-append": aa_helper_half_append,
}


def builtin_names() -> list[str]:
    return list(BUILTIN_BUILDERS)


def builtin_scenario(name: str) -> ScenarioConfig:
    builder = BUILTIN_BUILDERS.get(name)
    if builder is None:
        raise KeyError(name)
    return builder()
