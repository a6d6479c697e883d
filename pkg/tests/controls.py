"""Hand-built control traces for the property checkers.

Each control is a pair: a forged trace exhibiting exactly one violation and
a repaired twin with the violation undone. The checkers must fail the first
and pass the second; anything else means the checker itself drifted.
"""

from __future__ import annotations

from byzledger.atomic import make_aa_record
from byzledger.config import ScenarioConfig, canonical_config_bytes, config_digest, parse_config
from byzledger.core import OpTag, ProcessId, make_record
from byzledger.trace import Trace, TraceEvent

C0 = ProcessId("client", 0)
C1 = ProcessId("client", 1)
SERVERS = [ProcessId("server", i) for i in range(4)]

REC_A = make_record(C0, b"a")
REC_B = make_record(C1, b"b")


def synthesize(cfg: ScenarioConfig, events, outcome: str = "quiescent") -> Trace:
    evs = [TraceEvent(*e) for e in events]
    steps = max((e.step for e in evs), default=0)
    return Trace(config_digest(cfg), canonical_config_bytes(cfg), 0, evs, outcome, steps)


def plain_cfg() -> ScenarioConfig:
    return parse_config(
        {
            "name": "control",
            "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": [str(s) for s in SERVERS], "f": 1}],
        }
    )


def aa_cfg() -> ScenarioConfig:
    return parse_config(
        {
            "name": "control-aa",
            "ledgers": [
                {"name": ledger, "protocol": "u-bydl", "servers": [str(s) for s in SERVERS], "f": 1}
                for ledger in ("coord", "base-p", "base-q")
            ],
            "aa_instances": [
                {
                    "name": "x1",
                    "coordination": "coord",
                    "parties": {
                        str(C0): {"ledger": "base-p", "payload": "a"},
                        str(C1): {"ledger": "base-q", "payload": "b"},
                    },
                }
            ],
        }
    )


def invoke(step, actor, ledger, counter, kind, record=None):
    return (step, "invoke", actor, (ledger, OpTag(actor, counter), kind, record))


def ret(step, actor, ledger, counter, kind, result=None, record=None):
    return (step, "return", actor, (ledger, OpTag(actor, counter), kind, result, record))


def landed(step, ledger, record, pos, servers=SERVERS):
    return [(step, "state_append", s, (ledger, record, pos)) for s in servers]


def bc_control():
    cfg = plain_cfg()
    events = [invoke(1, C0, "main", 1, "get")]
    forged = synthesize(cfg, events)
    repaired = synthesize(cfg, events + [ret(5, C0, "main", 1, "get", result=())])
    return cfg, forged, repaired


def bsp_control():
    cfg = plain_cfg()
    base = [
        invoke(1, C0, "main", 1, "get"),
        invoke(2, C1, "main", 1, "get"),
        ret(5, C0, "main", 1, "get", result=(REC_A,)),
    ]
    forged = synthesize(cfg, base + [ret(6, C1, "main", 1, "get", result=(REC_B,))])
    repaired = synthesize(cfg, base + [ret(6, C1, "main", 1, "get", result=(REC_A, REC_B))])
    return cfg, forged, repaired


def bl_control():
    # an append completes, then a later get misses its record
    cfg = plain_cfg()
    base = [
        invoke(1, C0, "main", 1, "append", REC_A),
        *landed(5, "main", REC_A, 0),
        ret(10, C0, "main", 1, "append", record=REC_A),
        invoke(20, C1, "main", 1, "get"),
    ]
    forged = synthesize(cfg, base + [ret(30, C1, "main", 1, "get", result=())])
    repaired = synthesize(cfg, base + [ret(30, C1, "main", 1, "get", result=(REC_A,))])
    return cfg, forged, repaired


def agreement_control():
    cfg = plain_cfg()
    honest = landed(3, "main", REC_A, 0, servers=SERVERS[:3])
    forged = synthesize(cfg, honest + [(3, "state_append", SERVERS[3], ("main", REC_B, 0))])
    repaired = synthesize(cfg, honest + [(3, "state_append", SERVERS[3], ("main", REC_A, 0))])
    return cfg, forged, repaired


def aas_control():
    # one party's base record lands while the counterpart's never does
    cfg = aa_cfg()
    forged = synthesize(cfg, landed(4, "base-p", REC_A, 0))
    repaired = synthesize(cfg, landed(4, "base-p", REC_A, 0) + landed(5, "base-q", REC_B, 0))
    return cfg, forged, repaired


def aal_control():
    # both parties post descriptors but the exchange never executes
    cfg = aa_cfg()
    desc_p = make_aa_record(C0, (C0, C1), REC_A, "base-p", {C1: REC_B})
    desc_q = make_aa_record(C1, (C0, C1), REC_B, "base-q", {C0: REC_A})
    posted = [
        invoke(1, C0, "coord", 1, "append", desc_p),
        invoke(2, C1, "coord", 1, "append", desc_q),
        *landed(5, "coord", desc_p, 0),
        *landed(6, "coord", desc_q, 1),
        ret(7, C0, "coord", 1, "append", record=desc_p),
        ret(8, C1, "coord", 1, "append", record=desc_q),
    ]
    forged = synthesize(cfg, posted)
    repaired = synthesize(cfg, posted + landed(10, "base-p", REC_A, 0) + landed(11, "base-q", REC_B, 0))
    return cfg, forged, repaired


CONTROLS = {
    "bc": bc_control,
    "bsp": bsp_control,
    "bl": bl_control,
    "server_agreement": agreement_control,
    "aas": aas_control,
    "aal": aal_control,
}
