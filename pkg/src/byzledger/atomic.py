"""Atomic multi-party appends on top of the base ledgers.

The parties of one instance never talk to each other. Each posts a
descriptor to a shared coordination ledger naming itself, the party set,
its own base record with its target ledger, and the base records it expects
from everyone else. Two mechanisms watch for the moment all descriptors
mirror each other and then push every base record out:

* a smart coordination ledger whose servers run the matching step while
  appending (each server is also a client of every base ledger), or
* a plain coordination ledger polled by a pool of helper processes.

Either way, no base record is appended before every party has committed to
the exchange, and once all have, enough correct processes push all records.
The base ledgers only accept appends co-signed by t+1 of these pushers, so
a minority of faulty pushers cannot append anything one-sided.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

from .bab import BabEnvelope, BabPayload
from .core import (
    ClientRequest,
    OpTag,
    ProcessId,
    Record,
    RecordId,
    ServerResponse,
    WireFormatError,
    canonical_decode,
    canonical_encode,
    make_record,
    record_is_authentic,
    register_wire,
)
from .servers import Action, BabSubmit, ClientCall, SendResponse, _deliver_get


@dataclass(frozen=True, slots=True)
class AAValue:
    """Payload of a coordination-ledger descriptor record."""

    claimant: ProcessId
    parties: tuple[ProcessId, ...]  # sorted, includes the claimant
    own_record: Record
    target_ledger: str
    other_records: tuple[tuple[ProcessId, Record], ...]  # sorted by party


register_wire(
    AAValue,
    "aav",
    lambda v: (v.claimant, v.parties, v.own_record, v.target_ledger, v.other_records),
    lambda f: AAValue(f[0], f[1], f[2], f[3], f[4]),
)


def make_aa_record(
    claimant: ProcessId,
    parties: tuple[ProcessId, ...],
    own_record: Record,
    target_ledger: str,
    other_records: dict[ProcessId, Record],
) -> Record:
    parties = tuple(sorted(parties))
    others = tuple(sorted(other_records.items()))
    value = AAValue(claimant, parties, own_record, target_ledger, others)
    return make_record(claimant, canonical_encode(value))


@lru_cache(maxsize=8192)
def decode_aa(record: Record) -> AAValue | None:
    """Decode and sanity-check a descriptor; None for anything malformed."""
    try:
        value = canonical_decode(record.payload)
    except WireFormatError:
        return None
    if not isinstance(value, AAValue):
        return None
    parties = value.parties
    if len(parties) < 2 or tuple(sorted(set(parties))) != parties:
        return None
    if value.claimant not in parties:
        return None
    others = dict(value.other_records)
    if set(others) != set(parties) - {value.claimant}:
        return None
    if not record_is_authentic(value.own_record) or not all(record_is_authentic(r) for r in others.values()):
        return None
    return value


def find_counterparts(
    value: AAValue,
    pool: list[tuple[Record, AAValue]],
    skip: frozenset[RecordId],
) -> dict[ProcessId, tuple[Record, AAValue]] | None:
    """Locate one mirroring descriptor per other party, or None if any is missing.

    A candidate for party x must claim x, name the same party set, present
    exactly the base record the caller expects from x, and expect from the
    caller and from every third party exactly what the caller's descriptor
    says. Candidates are scanned in pool order, so the earliest one wins and
    every process resolves ties identically.
    """
    expected = dict(value.other_records)
    out: dict[ProcessId, tuple[Record, AAValue]] = {}
    for x in value.parties:
        if x == value.claimant:
            continue
        found = None
        for rec, cand in pool:
            if rec.rid in skip or cand.claimant != x or cand.parties != value.parties:
                continue
            if cand.own_record != expected[x]:
                continue
            cand_expected = dict(cand.other_records)
            if cand_expected.get(value.claimant) != value.own_record:
                continue
            if any(cand_expected.get(y) != expected[y] for y in expected if y != x):
                continue
            found = (rec, cand)
            break
        if found is None:
            return None
        out[x] = found
    return out


def _fire_appends(value: AAValue, counterparts: dict[ProcessId, tuple[Record, AAValue]]) -> list[ClientCall]:
    calls = [ClientCall(value.target_ledger, "append", value.own_record)]
    for x in sorted(counterparts):
        _, cand = counterparts[x]
        calls.append(ClientCall(cand.target_ledger, "append", cand.own_record))
    return calls


@dataclass(slots=True, eq=True)
class SmartServerState:
    """Coordination-ledger replica that pushes base appends on a full match."""

    me: ProcessId
    ledger: str
    t: int
    seq: tuple[Record, ...] = ()
    seq_rids: frozenset[RecordId] = frozenset()
    get_support: dict[OpTag, frozenset[ProcessId]] = field(default_factory=dict)
    append_support: dict[tuple[OpTag, RecordId], frozenset[ProcessId]] = field(default_factory=dict)
    answered: frozenset = frozenset()


def _descriptor_ok(req_client: ProcessId, record: Record) -> bool:
    # Only the record's creator may post a descriptor claiming itself.
    value = decode_aa(record)
    return value is not None and value.claimant == record.creator == req_client


def smart_on_request(state: SmartServerState, req: ClientRequest) -> tuple[SmartServerState, list[Action]]:
    if req.kind == "get":
        return state, [BabSubmit(state.ledger, BabPayload("get", req.tag))]
    if req.kind != "append" or req.record is None or not record_is_authentic(req.record):
        return state, []
    if not _descriptor_ok(req.tag.client, req.record):
        return state, []
    return state, [BabSubmit(state.ledger, BabPayload("append", req.tag, req.record))]


def smart_on_deliver(state: SmartServerState, env: BabEnvelope) -> tuple[SmartServerState, list[Action]]:
    payload = env.payload
    if payload.kind == "get":
        return _deliver_get(state, env, state.t + 1)
    record = payload.record
    if record is None or not record_is_authentic(record):
        return state, []
    if record.rid in state.seq_rids:
        return state, []
    if not _descriptor_ok(payload.tag.client, record):
        return state, []
    key = (payload.tag, record.rid)
    sup = state.append_support.get(key, frozenset()) | {env.origin}
    new_support = {**state.append_support, key: sup}
    if len(sup) < state.t + 1:
        return replace(state, append_support=new_support), []
    new_seq = state.seq + (record,)
    new_state = replace(
        state,
        append_support=new_support,
        seq=new_seq,
        seq_rids=state.seq_rids | {record.rid},
        answered=state.answered | {key},
    )
    value = decode_aa(record)
    assert value is not None
    pool = [(rec, aav) for rec in new_seq if (aav := decode_aa(rec)) is not None]
    counterparts = find_counterparts(value, pool, frozenset())
    actions: list[Action] = []
    if counterparts is not None:
        # The completing descriptor arrived: push every party's base record.
        # This fires exactly once per instance because each earlier descriptor
        # found no full mirror when it was appended.
        actions.extend(_fire_appends(value, counterparts))
    actions.append(SendResponse(payload.tag.client, state.ledger, ServerResponse(payload.tag, state.me, "append")))
    return new_state, actions


@dataclass(slots=True, eq=True)
class HelperState:
    """One polling process watching a plain coordination ledger."""

    me: ProcessId
    coordination: str
    consumed: frozenset[RecordId] = frozenset()


def helper_scan(state: HelperState, seq: tuple[Record, ...]) -> tuple[HelperState, list[ClientCall]]:
    """Fire base appends for every fully mirrored, not yet consumed match."""
    consumed = state.consumed
    pool = [(rec, aav) for rec in seq if (aav := decode_aa(rec)) is not None]
    actions: list[ClientCall] = []
    progressed = True
    while progressed:
        progressed = False
        for rec, value in pool:
            if rec.rid in consumed:
                continue
            counterparts = find_counterparts(value, pool, consumed | {rec.rid})
            if counterparts is None:
                continue
            actions.extend(_fire_appends(value, counterparts))
            consumed = consumed | {rec.rid} | {crec.rid for crec, _ in counterparts.values()}
            progressed = True
    if consumed is state.consumed:
        return state, actions
    return replace(state, consumed=consumed), actions
