"""Total-order broadcast backbone used by the ledger servers.

Each ledger owns one log. Servers submit payloads; the harness sequences
pending submissions into a single global order and every member consumes
that order through its own cursor. This models a Byzantine atomic broadcast
service as a trusted component: validity, agreement, integrity, and total
order hold by construction, and the origin field of every envelope is
stamped by the service itself, so a faulty server cannot submit under
another server's identity. Faulty members keep only the freedoms the model
grants them: submitting arbitrary well-formed payloads as themselves,
refusing to submit, or leaving their cursor behind.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import LedgerError, OpTag, ProcessId, Record, register_wire


class NotAMemberError(LedgerError):
    pass


@dataclass(frozen=True, slots=True)
class BabPayload:
    """What a server asks the broadcast to order: an echoed client operation."""

    kind: str  # "get" | "append"
    tag: OpTag
    record: Record | None = None


@dataclass(frozen=True, slots=True)
class BabEnvelope:
    """A sequenced payload plus the service-stamped submitter identity."""

    origin: ProcessId
    payload: BabPayload


register_wire(
    BabPayload,
    "bpay",
    lambda p: (p.kind, p.tag, p.record),
    lambda f: BabPayload(f[0], f[1], f[2]),
)
register_wire(
    BabEnvelope,
    "benv",
    lambda e: (e.origin, e.payload),
    lambda f: BabEnvelope(f[0], f[1]),
)


class BabLog:
    """One ledger's broadcast instance.

    ``pending`` holds submissions not yet ordered; ``entries`` is the agreed
    sequence; ``cursors`` tracks how far each member has consumed it. The
    scheduler decides when a pending envelope is sequenced and when a member
    advances, so delivery interleavings vary run to run while the order of
    ``entries`` stays identical for every member.
    """

    __slots__ = ("ledger", "members", "entries", "entry_steps", "entry_bounds", "pending", "cursors")

    def __init__(self, ledger: str, members: tuple[ProcessId, ...]):
        self.ledger = ledger
        self.members = members
        self.entries: list[BabEnvelope] = []
        self.entry_steps: list[int] = []
        self.entry_bounds: list[int] = []
        self.pending: list[tuple[BabEnvelope, int, int]] = []
        self.cursors: dict[ProcessId, int] = {m: 0 for m in members}

    def submit(self, submitter: ProcessId, payload: BabPayload, step: int, bound: int = 0) -> BabEnvelope:
        if submitter not in self.cursors:
            raise NotAMemberError(f"{submitter} is not a member of ledger {self.ledger!r}")
        env = BabEnvelope(submitter, payload)
        self.pending.append((env, step, bound))
        return env

    def sequence(self, pending_index: int, step: int, bound: int = 0) -> BabEnvelope:
        env, _, _ = self.pending.pop(pending_index)
        self.entries.append(env)
        self.entry_steps.append(step)
        self.entry_bounds.append(bound)
        return env

    def deliver(self, member: ProcessId) -> tuple[int, BabEnvelope]:
        cursor = self.cursors[member]
        env = self.entries[cursor]
        self.cursors[member] = cursor + 1
        return cursor, env

    def lag(self, member: ProcessId) -> int:
        return len(self.entries) - self.cursors[member]
