"""Core value types shared by every protocol module.

Defines process identities, ledger records, client operation tags, the
request/response messages exchanged between clients and servers, and a
canonical binary encoding.  The encoding is injective and deterministic:
equal values always produce equal bytes and distinct values never collide,
which is what record digests, trace files, and replay verification rely on.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any, Callable

DIGEST_BYTES = 32
MAX_PAYLOAD_BYTES = 64 * 1024


class LedgerError(Exception):
    """Base class for errors raised by this package."""


class PayloadTooLargeError(LedgerError):
    pass


class WireFormatError(LedgerError):
    pass


@dataclass(frozen=True, slots=True, order=True)
class ProcessId:
    """Identity of a simulated process. Ordering gives deterministic tie-breaks."""

    kind: str  # "client" | "server" | "helper"
    index: int

    def __str__(self) -> str:
        return f"{self.kind}:{self.index}"

    @staticmethod
    def parse(text: str) -> "ProcessId":
        kind, _, idx = text.partition(":")
        if kind not in ("client", "server", "helper") or not idx.isdigit():
            raise WireFormatError(f"bad process id {text!r}")
        return ProcessId(kind, int(idx))


@dataclass(frozen=True, slots=True, order=True)
class RecordId:
    digest: bytes

    def __str__(self) -> str:
        return self.digest.hex()[:12]

    @property
    def hex(self) -> str:
        return self.digest.hex()


@dataclass(frozen=True, slots=True, order=True)
class Record:
    """One ledger entry: a digest-derived id, its creator, and an opaque payload."""

    rid: RecordId
    creator: ProcessId
    payload: bytes


@dataclass(frozen=True, slots=True, order=True)
class OpTag:
    """Identifies one client operation: the issuing process and its op counter."""

    client: ProcessId
    counter: int


@dataclass(frozen=True, slots=True)
class ClientRequest:
    tag: OpTag
    kind: str  # "get" | "append"
    record: Record | None = None


@dataclass(frozen=True, slots=True)
class ServerResponse:
    tag: OpTag
    server: ProcessId
    kind: str  # "get" | "append"
    seq: tuple[Record, ...] | None = None  # get responses carry the sequence


def record_digest(creator: ProcessId, payload: bytes) -> RecordId:
    return RecordId(hashlib.sha256(canonical_encode((creator, payload))).digest())


def make_record(creator: ProcessId, payload: bytes) -> Record:
    """Build a record whose id binds the creator to the payload."""
    if len(payload) > MAX_PAYLOAD_BYTES:
        raise PayloadTooLargeError(f"payload is {len(payload)} bytes, max {MAX_PAYLOAD_BYTES}")
    return Record(record_digest(creator, payload), creator, payload)


def record_is_authentic(record: Record) -> bool:
    """True iff the record's id matches its creator and payload."""
    return record.rid == record_digest(record.creator, record.payload)


def is_prefix(shorter: tuple[Record, ...], longer: tuple[Record, ...]) -> bool:
    if len(shorter) > len(longer):
        return False
    return longer[: len(shorter)] == shorter


# Canonical encoding.
#
# Tagged, length-prefixed binary form over a small value algebra: None, bool,
# int, bytes, str, and tuples of encodable values.  Domain types are lowered
# to tagged tuples through a registry so higher layers (broadcast envelopes,
# trace events) can join without core importing them.

_T_NONE = b"\x00"
_T_FALSE = b"\x01"
_T_TRUE = b"\x02"
_T_INT = b"\x03"
_T_BYTES = b"\x04"
_T_STR = b"\x05"
_T_TUPLE = b"\x06"
_T_OBJ = b"\x07"

_wire_by_cls: dict[type, tuple[str, Callable[[Any], tuple]]] = {}
_wire_by_tag: dict[str, Callable[[tuple], Any]] = {}


def register_wire(cls: type, tag: str, lower: Callable[[Any], tuple], raise_: Callable[[tuple], Any]) -> None:
    """Register a domain type for canonical encoding under a unique tag."""
    if tag in _wire_by_tag:
        raise ValueError(f"wire tag {tag!r} already registered")
    _wire_by_cls[cls] = (tag, lower)
    _wire_by_tag[tag] = raise_


def _u32(n: int) -> bytes:
    return n.to_bytes(4, "big")


def _encode_into(value: Any, out: list[bytes]) -> None:
    if value is None:
        out.append(_T_NONE)
    elif value is True:
        out.append(_T_TRUE)
    elif value is False:
        out.append(_T_FALSE)
    elif isinstance(value, int):
        raw = value.to_bytes((value.bit_length() + 8) // 8 or 1, "big", signed=True)
        out.append(_T_INT)
        out.append(_u32(len(raw)))
        out.append(raw)
    elif isinstance(value, bytes):
        out.append(_T_BYTES)
        out.append(_u32(len(value)))
        out.append(value)
    elif isinstance(value, str):
        raw = value.encode("utf-8")
        out.append(_T_STR)
        out.append(_u32(len(raw)))
        out.append(raw)
    elif isinstance(value, tuple):
        out.append(_T_TUPLE)
        out.append(_u32(len(value)))
        for item in value:
            _encode_into(item, out)
    else:
        entry = _wire_by_cls.get(type(value))
        if entry is None:
            raise WireFormatError(f"cannot encode {type(value).__name__}")
        tag, lower = entry
        out.append(_T_OBJ)
        raw = tag.encode("utf-8")
        out.append(_u32(len(raw)))
        out.append(raw)
        _encode_into(lower(value), out)


def canonical_encode(value: Any) -> bytes:
    out: list[bytes] = []
    _encode_into(value, out)
    return b"".join(out)


def _decode_from(data: bytes, pos: int) -> tuple[Any, int]:
    if pos >= len(data):
        raise WireFormatError("truncated value")
    t = data[pos : pos + 1]
    pos += 1
    if t == _T_NONE:
        return None, pos
    if t == _T_TRUE:
        return True, pos
    if t == _T_FALSE:
        return False, pos
    if t in (_T_INT, _T_BYTES, _T_STR, _T_OBJ):
        if pos + 4 > len(data):
            raise WireFormatError("truncated length")
        n = int.from_bytes(data[pos : pos + 4], "big")
        pos += 4
        if pos + n > len(data):
            raise WireFormatError("truncated body")
        raw = data[pos : pos + n]
        pos += n
        if t == _T_INT:
            return int.from_bytes(raw, "big", signed=True), pos
        if t == _T_BYTES:
            return raw, pos
        if t == _T_STR:
            return raw.decode("utf-8"), pos
        tag = raw.decode("utf-8")
        raiser = _wire_by_tag.get(tag)
        if raiser is None:
            raise WireFormatError(f"unknown wire tag {tag!r}")
        fields, pos = _decode_from(data, pos)
        if not isinstance(fields, tuple):
            raise WireFormatError(f"object body for {tag!r} is not a tuple")
        try:
            return raiser(fields), pos
        except (TypeError, ValueError, IndexError) as exc:
            raise WireFormatError(f"bad fields for {tag!r}: {exc}") from exc
    if t == _T_TUPLE:
        if pos + 4 > len(data):
            raise WireFormatError("truncated tuple length")
        n = int.from_bytes(data[pos : pos + 4], "big")
        pos += 4
        items = []
        for _ in range(n):
            item, pos = _decode_from(data, pos)
            items.append(item)
        return tuple(items), pos
    raise WireFormatError(f"unknown type byte {t!r}")


def canonical_decode(data: bytes) -> Any:
    value, pos = _decode_from(data, 0)
    if pos != len(data):
        raise WireFormatError(f"{len(data) - pos} trailing bytes")
    return value


register_wire(
    ProcessId,
    "pid",
    lambda p: (p.kind, p.index),
    lambda f: ProcessId(f[0], f[1]),
)
register_wire(
    RecordId,
    "rid",
    lambda r: (r.digest,),
    lambda f: RecordId(f[0]),
)
register_wire(
    Record,
    "rec",
    lambda r: (r.rid, r.creator, r.payload),
    lambda f: Record(f[0], f[1], f[2]),
)
register_wire(
    OpTag,
    "tag",
    lambda t: (t.client, t.counter),
    lambda f: OpTag(f[0], f[1]),
)
register_wire(
    ClientRequest,
    "creq",
    lambda r: (r.tag, r.kind, r.record),
    lambda f: ClientRequest(f[0], f[1], f[2]),
)
register_wire(
    ServerResponse,
    "sres",
    lambda r: (r.tag, r.server, r.kind, r.seq),
    lambda f: ServerResponse(f[0], f[1], f[2], f[3]),
)
