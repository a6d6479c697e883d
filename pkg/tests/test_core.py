"""Value types and the canonical encoding."""

from __future__ import annotations

import hashlib

import pytest
from hypothesis import given, strategies as st

from byzledger.core import (
    MAX_PAYLOAD_BYTES,
    OpTag,
    PayloadTooLargeError,
    ProcessId,
    Record,
    RecordId,
    WireFormatError,
    canonical_decode,
    canonical_encode,
    is_prefix,
    make_record,
    record_digest,
    record_is_authentic,
)

C0 = ProcessId("client", 0)
S1 = ProcessId("server", 1)


def test_process_id_parse_and_str():
    assert ProcessId.parse("server:12") == ProcessId("server", 12)
    assert str(ProcessId("helper", 3)) == "helper:3"


@pytest.mark.parametrize("text", ["server", "disk:1", "client:", "client:-1", "client:one", ":3"])
def test_process_id_parse_rejects_garbage(text):
    with pytest.raises(WireFormatError):
        ProcessId.parse(text)


def test_process_id_ordering_is_total():
    ids = [ProcessId("server", 2), ProcessId("client", 9), ProcessId("server", 0)]
    assert sorted(ids) == [ProcessId("client", 9), ProcessId("server", 0), ProcessId("server", 2)]


def test_make_record_binds_creator_and_payload():
    rec = make_record(C0, b"hello")
    assert record_is_authentic(rec)
    assert not record_is_authentic(Record(rec.rid, C0, b"hell0"))
    assert not record_is_authentic(Record(rec.rid, S1, b"hello"))


def test_same_payload_different_creator_gets_different_id():
    assert make_record(C0, b"x").rid != make_record(S1, b"x").rid


def test_payload_size_cap():
    make_record(C0, b"a" * MAX_PAYLOAD_BYTES)
    with pytest.raises(PayloadTooLargeError):
        make_record(C0, b"a" * (MAX_PAYLOAD_BYTES + 1))


def test_record_digest_oracle():
    # Recompute the digest from the wire layout by hand: sha256 over the
    # encoded (creator, payload) pair. Byte-level recomputation guards the
    # encoding itself, not just round-tripping.
    def u32(n):
        return n.to_bytes(4, "big")

    def enc_str(s):
        raw = s.encode()
        return b"\x05" + u32(len(raw)) + raw

    def enc_int(n):
        raw = n.to_bytes((n.bit_length() + 8) // 8 or 1, "big", signed=True)
        return b"\x03" + u32(len(raw)) + raw

    pid_fields = b"\x06" + u32(2) + enc_str("client") + enc_int(3)
    pid_obj = b"\x07" + u32(3) + b"pid" + pid_fields
    payload = b"\x04" + u32(3) + b"abc"
    pair = b"\x06" + u32(2) + pid_obj + payload
    expected = hashlib.sha256(pair).digest()
    assert record_digest(ProcessId("client", 3), b"abc") == RecordId(expected)


def test_is_prefix_basics():
    a = make_record(C0, b"a")
    b = make_record(C0, b"b")
    assert is_prefix((), (a,))
    assert is_prefix((a,), (a, b))
    assert not is_prefix((b,), (a, b))
    assert not is_prefix((a, b), (a,))


@given(st.lists(st.integers(0, 3)), st.lists(st.integers(0, 3)))
def test_is_prefix_concatenation_property(xs, ys):
    pool = [make_record(C0, bytes([i])) for i in range(4)]
    a = tuple(pool[i] for i in xs)
    b = tuple(pool[i] for i in ys)
    assert is_prefix(a, a + b)
    if is_prefix(a, b) and is_prefix(b, a):
        assert a == b


encodable = st.recursive(
    st.none()
    | st.booleans()
    | st.integers(min_value=-(2**70), max_value=2**70)
    | st.binary(max_size=40)
    | st.text(max_size=40),
    lambda children: st.lists(children, max_size=5).map(tuple),
    max_leaves=20,
)


@given(encodable)
def test_canonical_encode_round_trips(value):
    assert canonical_decode(canonical_encode(value)) == value


@given(encodable, encodable)
def test_canonical_encode_is_injective(a, b):
    if canonical_encode(a) == canonical_encode(b):
        assert a == b


def test_encoding_distinguishes_lookalikes():
    # bool/int, str/bytes, and nesting must never collide
    assert canonical_encode(True) != canonical_encode(1)
    assert canonical_encode(False) != canonical_encode(0)
    assert canonical_encode("a") != canonical_encode(b"a")
    assert canonical_encode(("a",)) != canonical_encode("a")
    assert canonical_encode((("a",),)) != canonical_encode(("a",))
    assert canonical_encode(()) != canonical_encode(b"")


def test_int_edge_values_round_trip():
    for n in (0, 1, -1, 255, 256, -256, 2**63, -(2**63), 2**200, -(2**200)):
        assert canonical_decode(canonical_encode(n)) == n


def test_domain_objects_round_trip():
    rec = make_record(C0, "päyload".encode())
    tag = OpTag(S1, 42)
    for value in (rec, tag, (rec, tag, None), rec.rid):
        assert canonical_decode(canonical_encode(value)) == value


def test_decode_rejects_malformed_input():
    good = canonical_encode((1, "two", b"three"))
    with pytest.raises(WireFormatError):
        canonical_decode(good[:-1])  # truncated
    with pytest.raises(WireFormatError):
        canonical_decode(good + b"\x00")  # trailing bytes
    with pytest.raises(WireFormatError):
        canonical_decode(b"\x99")  # unknown type byte
    with pytest.raises(WireFormatError):
        canonical_decode(b"")


def test_decode_rejects_unknown_object_tag():
    payload = b"\x07" + (3).to_bytes(4, "big") + b"zzz" + canonical_encode(())
    with pytest.raises(WireFormatError):
        canonical_decode(payload)


def test_encode_rejects_unregistered_types():
    with pytest.raises(WireFormatError):
        canonical_encode(3.14)
    with pytest.raises(WireFormatError):
        canonical_encode([1, 2])
