"""Replica state machines for the two ledger server protocols.

Handlers are pure: they take a state and one input (a client request or a
delivered broadcast envelope) and return a new state plus a list of actions
for the harness to carry out. Nothing here touches the network or the clock,
which is what makes runs replayable and lets the checkers re-derive server
state from a trace.

Two protocols live here. The plain variant trusts clients and appends a
record once f+1 distinct servers have echoed the same operation. The
co-signed variant additionally requires append requests from t+1 distinct
allowed clients before a record may enter the sequence, which stops any
coalition of at most t faulty clients from planting a record on its own.

The co-signing count is taken over delivered envelopes (each envelope
carries the original client request, authenticated end to end), not over
requests received locally. Counting local arrivals would make the append
position depend on per-replica timing and correct replicas would diverge.
Delivered evidence is identical at every correct replica at every log
position, so all of them append the same records in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .bab import BabEnvelope, BabPayload
from .core import ClientRequest, OpTag, ProcessId, Record, RecordId, ServerResponse, record_is_authentic


@dataclass(frozen=True, slots=True)
class BabSubmit:
    """Action: hand a payload to this ledger's broadcast under my own id."""

    ledger: str
    payload: BabPayload


@dataclass(frozen=True, slots=True)
class SendResponse:
    """Action: send one response message to a client."""

    dest: ProcessId
    ledger: str
    response: ServerResponse


@dataclass(frozen=True, slots=True)
class ClientCall:
    """Action: run one operation through my embedded client (smart ledgers, helpers)."""

    ledger: str
    kind: str  # "get" | "append"
    record: Record | None = None


Action = BabSubmit | SendResponse | ClientCall


@dataclass(slots=True, eq=True)
class PlainServerState:
    """Replica of the client-unbounded ledger."""

    me: ProcessId
    ledger: str
    f: int
    seq: tuple[Record, ...] = ()
    seq_rids: frozenset[RecordId] = frozenset()
    get_support: dict[OpTag, frozenset[ProcessId]] = field(default_factory=dict)
    append_support: dict[tuple[OpTag, RecordId], frozenset[ProcessId]] = field(default_factory=dict)
    answered: frozenset = frozenset()


def plain_on_request(state: PlainServerState, req: ClientRequest) -> tuple[PlainServerState, list[Action]]:
    """Echo every well-formed client request into the broadcast."""
    if req.kind == "get":
        return state, [BabSubmit(state.ledger, BabPayload("get", req.tag))]
    if req.kind == "append" and req.record is not None and record_is_authentic(req.record):
        return state, [BabSubmit(state.ledger, BabPayload("append", req.tag, req.record))]
    return state, []


def _deliver_get(state, env: BabEnvelope, threshold: int):
    # Our sequence snapshot is taken the moment the threshold is crossed, so
    # every correct replica answers a given get with the same sequence.
    tag = env.payload.tag
    sup = state.get_support.get(tag, frozenset()) | {env.origin}
    new_support = {**state.get_support, tag: sup}
    actions: list[Action] = []
    answered = state.answered
    if len(sup) >= threshold and tag not in answered:
        answered = answered | {tag}
        actions.append(SendResponse(tag.client, state.ledger, ServerResponse(tag, state.me, "get", state.seq)))
    return replace(state, get_support=new_support, answered=answered), actions


def plain_on_deliver(state: PlainServerState, env: BabEnvelope) -> tuple[PlainServerState, list[Action]]:
    payload = env.payload
    if payload.kind == "get":
        return _deliver_get(state, env, state.f + 1)
    record = payload.record
    if record is None or not record_is_authentic(record):
        return state, []
    if record.rid in state.seq_rids:
        return state, []
    key = (payload.tag, record.rid)
    sup = state.append_support.get(key, frozenset()) | {env.origin}
    new_support = {**state.append_support, key: sup}
    if len(sup) < state.f + 1:
        return replace(state, append_support=new_support), []
    new_state = replace(
        state,
        append_support=new_support,
        seq=state.seq + (record,),
        seq_rids=state.seq_rids | {record.rid},
        answered=state.answered | {key},
    )
    ack = SendResponse(payload.tag.client, state.ledger, ServerResponse(payload.tag, state.me, "append"))
    return new_state, [ack]


@dataclass(slots=True, eq=True)
class CosignServerState:
    """Replica of the client-bounded ledger: appends need co-signing clients."""

    me: ProcessId
    ledger: str
    f: int
    t: int
    allowed_clients: frozenset[ProcessId]
    seq: tuple[Record, ...] = ()
    seq_rids: frozenset[RecordId] = frozenset()
    get_support: dict[OpTag, frozenset[ProcessId]] = field(default_factory=dict)
    # Append evidence is keyed by record id alone: co-signers issue their own
    # tags for the same record, so per-tag counting could never reach t+1.
    append_support: dict[RecordId, frozenset[ProcessId]] = field(default_factory=dict)
    client_support: dict[RecordId, frozenset[tuple[ProcessId, OpTag]]] = field(default_factory=dict)
    answered: frozenset = frozenset()


def cosign_on_request(state: CosignServerState, req: ClientRequest) -> tuple[CosignServerState, list[Action]]:
    """Echo gets from anyone; echo appends only from allowed clients."""
    if req.kind == "get":
        return state, [BabSubmit(state.ledger, BabPayload("get", req.tag))]
    if req.kind != "append" or req.record is None or not record_is_authentic(req.record):
        return state, []
    if req.tag.client not in state.allowed_clients:
        return state, []
    return state, [BabSubmit(state.ledger, BabPayload("append", req.tag, req.record))]


def cosign_on_deliver(state: CosignServerState, env: BabEnvelope) -> tuple[CosignServerState, list[Action]]:
    payload = env.payload
    if payload.kind == "get":
        return _deliver_get(state, env, state.f + 1)
    record = payload.record
    if record is None or not record_is_authentic(record):
        return state, []
    if payload.tag.client not in state.allowed_clients:
        return state, []
    rid = record.rid
    if rid in state.seq_rids:
        # Late co-signer of an already appended record: acknowledge directly.
        key = (rid, payload.tag.client, payload.tag)
        if key in state.answered:
            return state, []
        ack = SendResponse(payload.tag.client, state.ledger, ServerResponse(payload.tag, state.me, "append"))
        return replace(state, answered=state.answered | {key}), [ack]
    origins = state.append_support.get(rid, frozenset()) | {env.origin}
    signers = state.client_support.get(rid, frozenset()) | {(payload.tag.client, payload.tag)}
    new_state = replace(
        state,
        append_support={**state.append_support, rid: origins},
        client_support={**state.client_support, rid: signers},
    )
    if len(origins) < state.f + 1 or len({client for client, _ in signers}) < state.t + 1:
        return new_state, []
    answered = new_state.answered
    actions: list[Action] = []
    for client, tag in sorted(signers):
        key = (rid, client, tag)
        if key in answered:
            continue
        answered = answered | {key}
        actions.append(SendResponse(client, state.ledger, ServerResponse(tag, state.me, "append")))
    new_state = replace(
        new_state,
        seq=new_state.seq + (record,),
        seq_rids=new_state.seq_rids | {rid},
        answered=answered,
    )
    return new_state, actions
