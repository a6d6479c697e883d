"""Execution traces: the full event history of one simulated run.

Every observable step is recorded: operation invocations and returns,
message sends and receipts, broadcast submissions, sequencing decisions and
per-replica deliveries, server state appends, and helper polls. A trace file
embeds the canonical form of the scenario it came from plus the seed, so
checking and replaying need nothing but the file.

The file is line-oriented: a header, one hex-encoded canonical event per
line, and an end marker saying whether the run reached quiescence or was
truncated at the step bound.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any, NamedTuple

from .core import LedgerError, ProcessId, WireFormatError, canonical_decode, canonical_encode

FORMAT_NAME = "byzledger-trace"
FORMAT_VERSION = 1

KINDS = (
    "invoke",
    "return",
    "send",
    "receive",
    "bab_submit",
    "bab_sequence",
    "bab_deliver",
    "state_append",
    "helper_poll",
)


class TraceFormatError(LedgerError):
    pass


class TraceEvent(NamedTuple):
    step: int
    kind: str
    actor: ProcessId
    body: tuple


@dataclass(slots=True)
class Trace:
    config_digest: str
    config_blob: bytes
    seed: int
    events: list[TraceEvent]
    outcome: str  # "quiescent" | "truncated"
    steps: int

    @property
    def quiescent(self) -> bool:
        return self.outcome == "quiescent"


def write_trace(path: str, trace: Trace) -> None:
    header = canonical_encode((FORMAT_NAME, FORMAT_VERSION, trace.config_digest, trace.config_blob, trace.seed))
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header.hex() + "\n")
        for ev in trace.events:
            fh.write(canonical_encode(tuple(ev)).hex() + "\n")
        fh.write(canonical_encode(("end", trace.outcome, trace.steps)).hex() + "\n")


def read_trace(path: str) -> Trace:
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [line.strip() for line in fh if line.strip()]
    except (OSError, UnicodeDecodeError) as exc:
        raise TraceFormatError(f"cannot read {path}: {exc}") from exc
    if len(lines) < 2:
        raise TraceFormatError(f"{path}: too short to be a trace")
    header = _decode_line(path, 1, lines[0])
    if not (isinstance(header, tuple) and len(header) == 5 and header[0] == FORMAT_NAME):
        raise TraceFormatError(f"{path}: missing trace header")
    _, version, digest, blob, seed = header
    if version != FORMAT_VERSION:
        raise TraceFormatError(f"{path}: unsupported trace version {version!r}")
    if not isinstance(blob, bytes) or not isinstance(digest, str) or not isinstance(seed, int):
        raise TraceFormatError(f"{path}: malformed header fields")
    if hashlib.sha256(blob).hexdigest() != digest:
        raise TraceFormatError(f"{path}: embedded scenario does not match its digest")
    tail = _decode_line(path, len(lines), lines[-1])
    if not (isinstance(tail, tuple) and len(tail) == 3 and tail[0] == "end"):
        raise TraceFormatError(f"{path}: missing end marker")
    _, outcome, steps = tail
    if outcome not in ("quiescent", "truncated") or not isinstance(steps, int):
        raise TraceFormatError(f"{path}: malformed end marker")
    events: list[TraceEvent] = []
    for lineno, line in enumerate(lines[1:-1], start=2):
        decoded = _decode_line(path, lineno, line)
        if not (
            isinstance(decoded, tuple)
            and len(decoded) == 4
            and isinstance(decoded[0], int)
            and decoded[1] in KINDS
            and isinstance(decoded[2], ProcessId)
            and isinstance(decoded[3], tuple)
        ):
            raise TraceFormatError(f"{path}:{lineno}: malformed event")
        events.append(TraceEvent(*decoded))
    return Trace(digest, blob, seed, events, outcome, steps)


def _decode_line(path: str, lineno: int, line: str) -> Any:
    try:
        return canonical_decode(bytes.fromhex(line))
    except (ValueError, WireFormatError) as exc:
        raise TraceFormatError(f"{path}:{lineno}: {exc}") from exc
