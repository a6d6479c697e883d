"""Broadcast log: membership, total order, per-member cursors."""

from __future__ import annotations

import pytest

from byzledger.bab import BabLog, BabPayload, NotAMemberError
from byzledger.core import OpTag, ProcessId, make_record

S = [ProcessId("server", i) for i in range(4)]
C0 = ProcessId("client", 0)


def payload(n: int) -> BabPayload:
    return BabPayload("append", OpTag(C0, n), make_record(C0, bytes([n])))


def test_submit_requires_membership():
    log = BabLog("main", tuple(S))
    with pytest.raises(NotAMemberError):
        log.submit(ProcessId("server", 9), payload(1), step=0)
    with pytest.raises(NotAMemberError):
        log.submit(C0, payload(1), step=0)


def test_origin_is_stamped_by_the_service():
    log = BabLog("main", tuple(S))
    env = log.submit(S[2], payload(1), step=0)
    assert env.origin == S[2]


def test_sequencing_pops_the_chosen_pending_entry():
    log = BabLog("main", tuple(S))
    log.submit(S[0], payload(1), step=0)
    log.submit(S[1], payload(2), step=0)
    log.submit(S[2], payload(3), step=0)
    assert log.sequence(1, step=1).origin == S[1]
    assert [env.origin for env, _, _ in log.pending] == [S[0], S[2]]
    assert log.sequence(0, step=2).origin == S[0]
    assert [env.origin for env in log.entries] == [S[1], S[0]]


def test_every_member_consumes_the_same_order():
    log = BabLog("main", tuple(S))
    for i in range(3):
        log.submit(S[i], payload(i), step=0)
    for i in range(3):
        log.sequence(0, step=i)
    histories = {}
    for member in S:
        seen = []
        while log.lag(member):
            cursor, env = log.deliver(member)
            seen.append((cursor, env))
        histories[member] = seen
    assert len({tuple(h) for h in histories.values()}) == 1
    assert [c for c, _ in histories[S[0]]] == [0, 1, 2]


def test_cursors_advance_independently():
    log = BabLog("main", tuple(S))
    log.submit(S[0], payload(1), step=0)
    log.sequence(0, step=1)
    log.deliver(S[0])
    assert log.lag(S[0]) == 0
    assert log.lag(S[1]) == 1
    log.submit(S[0], payload(2), step=2)
    log.sequence(0, step=3)
    assert log.lag(S[0]) == 1
    assert log.lag(S[1]) == 2
