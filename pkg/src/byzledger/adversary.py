"""Deterministic Byzantine strategies.

Each strategy scripts one kind of misbehavior and stays otherwise honest, so
a scenario exercises a single attack at a time. Strategies are pure like the
protocol handlers: the harness asks them for actions at the same hook points
where it would call the honest handler.

The model keeps authentication intact. A faulty process can fabricate
content only under its own identity, suppress or redirect its own messages,
and co-sign things that genuinely exist; it can never forge another
process's requests or submit broadcast payloads under another server's id.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .atomic import HelperState, decode_aa
from .bab import BabPayload
from .clients import LedgerView, SendRequest
from .core import ClientRequest, OpTag, ProcessId, Record, ServerResponse
from .servers import Action, BabSubmit, ClientCall, SendResponse


@dataclass(frozen=True, slots=True)
class ServerSilent:
    """Crashed replica: receives nothing, sends nothing."""


@dataclass(frozen=True, slots=True)
class ServerWrongGet:
    """Answers gets with a forged sequence instead of the real snapshot."""

    forged_seq: tuple[Record, ...]


@dataclass(frozen=True, slots=True)
class ServerNoEcho:
    """Drops every client request silently but follows deliveries honestly."""


@dataclass(frozen=True, slots=True)
class ServerSpuriousEcho:
    """Submits one append echo nobody asked it to relay, then behaves.

    The echoed request must be something the named client really issued (a
    collusion partner) or a fabrication under an identity the attacker owns;
    forging an honest client's request would not survive authentication.
    """

    ledger: str
    tag: OpTag
    record: Record


@dataclass(frozen=True, slots=True)
class ServerHalfAppend:
    """Coordination server that pushes the claimant's base record eagerly.

    Skips the mirror check and never pushes counterpart records, attempting
    a one-sided exchange.
    """


@dataclass(frozen=True, slots=True)
class HelperHalfAppend:
    """Polling helper with the same one-sided behavior as ServerHalfAppend."""


@dataclass(frozen=True, slots=True)
class ClientPartialSend:
    """Sends one append to fewer servers than the protocol requires and walks away."""

    ledger: str
    record: Record
    targets: tuple[ProcessId, ...]


@dataclass(frozen=True, slots=True)
class ClientEquivocate:
    """Sends two different records under the same operation tag."""

    ledger: str
    record_a: Record
    record_b: Record


@dataclass(frozen=True, slots=True)
class ClientNonMember:
    """Follows the normal append pattern without being an allowed client."""

    ledger: str
    record: Record


ServerStrategy = ServerSilent | ServerWrongGet | ServerNoEcho | ServerSpuriousEcho | ServerHalfAppend
ClientStrategy = ClientPartialSend | ClientEquivocate | ClientNonMember
Strategy = ServerStrategy | ClientStrategy | HelperHalfAppend


def start_actions(strategy: Strategy, me: ProcessId, views: dict[str, LedgerView]) -> list:
    """One-shot actions fired when the process is first scheduled."""
    if isinstance(strategy, ServerSpuriousEcho):
        return [BabSubmit(strategy.ledger, BabPayload("append", strategy.tag, strategy.record))]
    if isinstance(strategy, ClientPartialSend):
        req = ClientRequest(OpTag(me, 1), "append", strategy.record)
        return [SendRequest(dest, strategy.ledger, req) for dest in strategy.targets]
    if isinstance(strategy, ClientEquivocate):
        tag = OpTag(me, 1)
        view = views[strategy.ledger]
        targets = view.members[: 2 * view.f_param + 1]
        half = (len(targets) + 1) // 2
        out = [SendRequest(d, strategy.ledger, ClientRequest(tag, "append", strategy.record_a)) for d in targets[:half]]
        out += [SendRequest(d, strategy.ledger, ClientRequest(tag, "append", strategy.record_b)) for d in targets[half:]]
        return out
    if isinstance(strategy, ClientNonMember):
        view = views[strategy.ledger]
        req = ClientRequest(OpTag(me, 1), "append", strategy.record)
        return [SendRequest(d, strategy.ledger, req) for d in view.members[: 2 * view.f_param + 1]]
    return []


def consumes_deliveries(strategy: Strategy) -> bool:
    """False when the strategy never processes its broadcast backlog."""
    return not isinstance(strategy, ServerSilent)


def wrap_request(strategy, handler, state, req: ClientRequest):
    """Byzantine server's treatment of a directly received client request."""
    if isinstance(strategy, (ServerSilent, ServerNoEcho)):
        return state, []
    return handler(state, req)


def wrap_deliver(strategy, handler, state, env):
    """Byzantine server's treatment of one delivered broadcast envelope."""
    if isinstance(strategy, ServerSilent):
        return state, []
    new_state, actions = handler(state, env)
    if isinstance(strategy, ServerWrongGet):
        actions = [_forge_get(a, strategy.forged_seq) for a in actions]
    elif isinstance(strategy, ServerHalfAppend) and len(new_state.seq) > len(state.seq):
        value = decode_aa(new_state.seq[-1])
        kept = [a for a in actions if not isinstance(a, ClientCall)]
        if value is not None:
            kept.insert(0, ClientCall(value.target_ledger, "append", value.own_record))
        actions = kept
    return new_state, actions


def _forge_get(action, forged_seq: tuple[Record, ...]):
    if isinstance(action, SendResponse) and action.response.kind == "get":
        forged = ServerResponse(action.response.tag, action.response.server, "get", forged_seq)
        return SendResponse(action.dest, action.ledger, forged)
    return action


def half_append_scan(state: HelperState, seq: tuple[Record, ...]) -> tuple[HelperState, list[ClientCall]]:
    """HelperHalfAppend's scan: push every unconsumed claimant record, match or not."""
    consumed = state.consumed
    actions: list[ClientCall] = []
    for rec in seq:
        if rec.rid in consumed:
            continue
        value = decode_aa(rec)
        if value is None:
            continue
        actions.append(ClientCall(value.target_ledger, "append", value.own_record))
        consumed = consumed | {rec.rid}
    if consumed is state.consumed:
        return state, actions
    return replace(state, consumed=consumed), actions
