"""Client side of the ledger protocols.

A client tags each operation with its own id and a local counter, sends the
request to a write quorum of servers, and completes once enough distinct
servers answered: f+1 identical sequences for a get, f+1 acknowledgements
for an append. Identical means the whole sequence matches bit for bit under
the canonical encoding; responses are bucketed by sequence value and the
first bucket with f+1 distinct servers wins. Faulty servers can therefore
delay an operation or pad losing buckets, but never make two correct
clients accept diverging results.

One instance also serves as the embedded client inside smart-ledger servers
and helpers; the single per-process counter keeps tags unique across every
ledger that process talks to.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .core import ClientRequest, OpTag, ProcessId, Record, RecordId, ServerResponse


@dataclass(frozen=True, slots=True)
class LedgerView:
    """What a client needs to know about one ledger to run an operation."""

    name: str
    members: tuple[ProcessId, ...]  # sorted, lowest id first
    f_param: int  # quorum parameter: 2f+1 targets, f+1 matching replies
    spray_all: bool = False  # send to every member instead of the minimal quorum


@dataclass(frozen=True, slots=True)
class SendRequest:
    """Action: send one request message to a server."""

    dest: ProcessId
    ledger: str
    request: ClientRequest


@dataclass(frozen=True, slots=True)
class CompletedOp:
    tag: OpTag
    ledger: str
    kind: str  # "get" | "append"
    result: tuple[Record, ...] | None  # the agreed sequence for gets
    record: Record | None  # the appended record for appends


@dataclass(frozen=True, slots=True)
class PendingOp:
    ledger: str
    kind: str
    threshold: int
    record: Record | None = None
    acks: frozenset[ProcessId] = frozenset()
    buckets: tuple[tuple[tuple[Record, ...], frozenset[ProcessId]], ...] = ()


@dataclass(slots=True, eq=True)
class ClientState:
    me: ProcessId
    counter: int = 0
    pending: dict[OpTag, PendingOp] = field(default_factory=dict)
    done: frozenset[OpTag] = frozenset()


def _targets(view: LedgerView) -> tuple[ProcessId, ...]:
    if view.spray_all:
        return view.members
    return view.members[: 2 * view.f_param + 1]


def _invoke(state: ClientState, view: LedgerView, kind: str, record: Record | None):
    tag = OpTag(state.me, state.counter + 1)
    op = PendingOp(view.name, kind, view.f_param + 1, record)
    new_state = replace(state, counter=state.counter + 1, pending={**state.pending, tag: op})
    req = ClientRequest(tag, kind, record)
    sends = [SendRequest(dest, view.name, req) for dest in _targets(view)]
    return new_state, sends, tag


def invoke_get(state: ClientState, view: LedgerView) -> tuple[ClientState, list[SendRequest], OpTag]:
    return _invoke(state, view, "get", None)


def invoke_append(state: ClientState, view: LedgerView, record: Record) -> tuple[ClientState, list[SendRequest], OpTag]:
    return _invoke(state, view, "append", record)


def on_response(state: ClientState, resp: ServerResponse) -> tuple[ClientState, CompletedOp | None]:
    """Fold one server response in; stray, duplicate, or mismatched ones are ignored."""
    op = state.pending.get(resp.tag)
    if op is None or resp.kind != op.kind:
        return state, None
    if op.kind == "append":
        acks = op.acks | {resp.server}
        if len(acks) < op.threshold:
            return replace(state, pending={**state.pending, resp.tag: replace(op, acks=acks)}), None
        return _complete(state, resp.tag, CompletedOp(resp.tag, op.ledger, "append", None, op.record))
    if resp.seq is None:
        return state, None
    buckets = []
    hit: frozenset[ProcessId] | None = None
    seen = False
    for seq, voters in op.buckets:
        if seq == resp.seq:
            voters = voters | {resp.server}
            hit = voters
            seen = True
        buckets.append((seq, voters))
    if not seen:
        hit = frozenset({resp.server})
        buckets.append((resp.seq, hit))
    if hit is not None and len(hit) >= op.threshold:
        return _complete(state, resp.tag, CompletedOp(resp.tag, op.ledger, "get", resp.seq, None))
    new_op = replace(op, buckets=tuple(buckets))
    return replace(state, pending={**state.pending, resp.tag: new_op}), None


def _complete(state: ClientState, tag: OpTag, completed: CompletedOp):
    pending = dict(state.pending)
    del pending[tag]
    return replace(state, pending=pending, done=state.done | {tag}), completed
