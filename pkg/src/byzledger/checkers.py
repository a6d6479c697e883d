"""Executable checkers for the ledger safety and liveness properties.

Each checker consumes a recorded trace plus its scenario and returns a
verdict: pass, fail with a counterexample, or inconclusive when a truncated
run cannot settle a liveness claim. Counterexamples carry the offending
operations or positions so a reported violation can be re-verified directly
against the predicate, without re-running the checker.

Completeness note for the ordering checker: an append-only sequence object
has no operations that remove or reorder entries, so real-time precedence
plus prefix comparability of reads pins down every legal behavior. The
conditions below therefore reject exactly the non-linearizable histories:
reads must be mutually prefix-comparable, a read after a completed append
must contain its record, a read that returned before any evidence of a
record existed must not contain it, reads respect precedence order, and two
appends separated in real time appear in that order in every read. Records
may enter a ledger through several operations (co-signing) or through none
that completed (a faulty client teaming with a faulty server), so "evidence
of a record" means the earliest append invocation naming it or its earliest
arrival in a correct replica's sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import ScenarioConfig
from .core import LedgerError, OpTag, ProcessId, Record, RecordId, is_prefix
from .trace import Trace, TraceEvent


@dataclass(frozen=True, slots=True)
class Verdict:
    prop: str
    status: str  # "pass" | "fail" | "inconclusive"
    detail: str = ""
    counterexample: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True, slots=True)
class OpRecord:
    tag: OpTag
    actor: ProcessId
    correct: bool
    ledger: str
    kind: str
    invoke_step: int
    return_step: int | None
    result: tuple[Record, ...] | None
    record: Record | None

    @property
    def completed(self) -> bool:
        return self.return_step is not None


@dataclass(frozen=True, slots=True)
class EffectiveAppend:
    """A record present in correct replicas with no completed append behind it."""

    ledger: str
    record: Record
    servers: tuple[ProcessId, ...]


@dataclass(slots=True)
class TraceFacts:
    """Everything the checkers need, digested from raw events once."""

    ops: list[OpRecord] = field(default_factory=list)
    seqs: dict[tuple[str, ProcessId], list[Record]] = field(default_factory=dict)
    append_steps: dict[tuple[str, RecordId], int] = field(default_factory=dict)  # earliest correct-replica append
    quiescent: bool = False


def digest_trace(trace: Trace, cfg: ScenarioConfig) -> TraceFacts:
    byz = cfg.byzantine()
    facts = TraceFacts(quiescent=trace.quiescent)
    open_ops: dict[tuple[ProcessId, OpTag], tuple] = {}
    for ev in trace.events:
        if ev.kind == "invoke":
            ledger, tag, kind, record = ev.body
            open_ops[(ev.actor, tag)] = (ledger, kind, record, ev.step)
        elif ev.kind == "return":
            ledger, tag, kind, result, record = ev.body
            started = open_ops.pop((ev.actor, tag), None)
            if started is None:
                raise LedgerError(f"return without invoke for {tag} at step {ev.step}")
            facts.ops.append(
                OpRecord(tag, ev.actor, ev.actor not in byz, ledger, kind, started[3], ev.step, result, record)
            )
        elif ev.kind == "state_append":
            ledger, record, pos = ev.body
            stream = facts.seqs.setdefault((ledger, ev.actor), [])
            if pos != len(stream):
                raise LedgerError(f"non-contiguous append at {ev.actor} position {pos}")
            stream.append(record)
            if ev.actor not in byz:
                facts.append_steps.setdefault((ledger, record.rid), ev.step)
    for (actor, tag), (ledger, kind, record, step) in open_ops.items():
        facts.ops.append(OpRecord(tag, actor, actor not in byz, ledger, kind, step, None, None, record))
    facts.ops.sort(key=lambda op: op.invoke_step)
    return facts


def _correct_servers(cfg: ScenarioConfig, ledger: str) -> list[ProcessId]:
    byz = cfg.byzantine()
    return [s for s in cfg.ledger(ledger).servers if s not in byz]


def _final_seq(facts: TraceFacts, ledger: str, server: ProcessId) -> tuple[Record, ...]:
    return tuple(facts.seqs.get((ledger, server), ()))


def check_bc(trace: Trace, cfg: ScenarioConfig, facts: TraceFacts | None = None) -> Verdict:
    """Every operation a correct process invoked must have completed."""
    facts = facts if facts is not None else digest_trace(trace, cfg)
    if not facts.quiescent:
        return Verdict("bc", "inconclusive", "run truncated before quiescence")
    hanging = [op for op in facts.ops if op.correct and not op.completed]
    if hanging:
        names = ", ".join(f"{op.actor}#{op.tag.counter} {op.kind} on {op.ledger}" for op in hanging[:5])
        return Verdict("bc", "fail", f"{len(hanging)} uncompleted operations: {names}", tuple(hanging))
    return Verdict("bc", "pass", f"{sum(1 for op in facts.ops if op.correct)} operations completed")


def check_bsp(trace: Trace, cfg: ScenarioConfig, facts: TraceFacts | None = None) -> Verdict:
    """Any two sequences read by correct processes are prefix-comparable."""
    facts = facts if facts is not None else digest_trace(trace, cfg)
    checked = 0
    for lc in cfg.ledgers:
        gets = [op for op in facts.ops if op.correct and op.kind == "get" and op.ledger == lc.name and op.completed]
        gets.sort(key=lambda op: len(op.result))
        for a, b in zip(gets, gets[1:]):
            checked += 1
            if not is_prefix(a.result, b.result):
                detail = f"gets {a.actor}#{a.tag.counter} and {b.actor}#{b.tag.counter} on {lc.name} are not prefix-related"
                return Verdict("bsp", "fail", detail, (a, b))
    return Verdict("bsp", "pass", f"{checked} adjacent read pairs prefix-related")


def check_server_agreement(trace: Trace, cfg: ScenarioConfig, facts: TraceFacts | None = None) -> Verdict:
    """Correct replicas of one ledger hold the same sequence position by position."""
    facts = facts if facts is not None else digest_trace(trace, cfg)
    for lc in cfg.ledgers:
        servers = _correct_servers(cfg, lc.name)
        streams = [(s, _final_seq(facts, lc.name, s)) for s in servers]
        longest = max((len(seq) for _, seq in streams), default=0)
        for pos in range(longest):
            values = {seq[pos] for _, seq in streams if pos < len(seq)}
            if len(values) > 1:
                who = tuple((s, seq[pos]) for s, seq in streams if pos < len(seq))
                return Verdict(
                    "server_agreement",
                    "fail",
                    f"ledger {lc.name}: correct replicas disagree at position {pos}",
                    who,
                )
        if facts.quiescent:
            lengths = {len(seq) for _, seq in streams}
            if len(lengths) > 1:
                who = tuple((s, len(seq)) for s, seq in streams)
                return Verdict(
                    "server_agreement",
                    "fail",
                    f"ledger {lc.name}: quiescent but sequence lengths differ",
                    who,
                )
    if not facts.quiescent:
        return Verdict("server_agreement", "inconclusive", "prefixes agree; run truncated before quiescence")
    return Verdict("server_agreement", "pass", "all correct replicas agree")


def _earliest_evidence(facts: TraceFacts, ledger: str, rid: RecordId) -> int | None:
    """First step at which a record demonstrably existed in the system."""
    best = facts.append_steps.get((ledger, rid))
    for op in facts.ops:
        if op.kind == "append" and op.ledger == ledger and op.record is not None and op.record.rid == rid:
            if best is None or op.invoke_step < best:
                best = op.invoke_step
    return best


def check_bl(trace: Trace, cfg: ScenarioConfig, facts: TraceFacts | None = None) -> Verdict:
    """Reads and completed appends by correct processes form a linearizable history."""
    facts = facts if facts is not None else digest_trace(trace, cfg)
    bsp = check_bsp(trace, cfg, facts)
    if not bsp.ok:
        return Verdict("bl", "fail", f"reads not prefix-comparable: {bsp.detail}", bsp.counterexample)
    for lc in cfg.ledgers:
        name = lc.name
        ops = [op for op in facts.ops if op.correct and op.ledger == name]
        gets = [op for op in ops if op.kind == "get" and op.completed]
        appends = [op for op in ops if op.kind == "append" and op.completed]
        positions = {id(g): {r.rid: i for i, r in enumerate(g.result)} for g in gets}
        for a in appends:
            rid = a.record.rid
            for g in gets:
                has = rid in positions[id(g)]
                if a.return_step < g.invoke_step and not has:
                    detail = f"append {a.actor}#{a.tag.counter} completed before get {g.actor}#{g.tag.counter} but its record is missing"
                    return Verdict("bl", "fail", detail, (a, g))
                if has and g.return_step < a.invoke_step:
                    evidence = _earliest_evidence(facts, name, rid)
                    if evidence is None or evidence > g.return_step:
                        detail = (
                            f"get {g.actor}#{g.tag.counter} returned a record before any append of it was invoked"
                        )
                        return Verdict("bl", "fail", detail, (g, a))
        by_return = sorted(gets, key=lambda g: g.return_step)
        for g1 in by_return:
            for g2 in gets:
                if g1.return_step < g2.invoke_step and not is_prefix(g1.result, g2.result):
                    detail = f"get {g2.actor}#{g2.tag.counter} does not extend the earlier get {g1.actor}#{g1.tag.counter}"
                    return Verdict("bl", "fail", detail, (g1, g2))
        for a1 in appends:
            for a2 in appends:
                if a1.record.rid == a2.record.rid or a1.return_step >= a2.invoke_step:
                    continue
                evidence2 = _earliest_evidence(facts, name, a2.record.rid)
                if evidence2 is not None and evidence2 <= a1.return_step:
                    continue  # the later record existed early through another path
                for g in gets:
                    pos = positions[id(g)]
                    p2 = pos.get(a2.record.rid)
                    if p2 is None:
                        continue
                    p1 = pos.get(a1.record.rid)
                    if p1 is None or p1 > p2:
                        detail = (
                            f"append {a1.actor}#{a1.tag.counter} preceded append {a2.actor}#{a2.tag.counter} "
                            f"but get {g.actor}#{g.tag.counter} orders them otherwise"
                        )
                        return Verdict("bl", "fail", detail, (a1, a2, g))
    return Verdict("bl", "pass", "reads and completed appends linearize")


def detect_effective_appends(trace: Trace, cfg: ScenarioConfig, facts: TraceFacts | None = None) -> list[EffectiveAppend]:
    """Records sitting in correct replicas although nobody's append completed.

    These are legal under the protocols (a faulty client undersends, a
    faulty server supplies the missing echoes) and are exactly the appends
    the completeness property does not owe a response for.
    """
    facts = facts if facts is not None else digest_trace(trace, cfg)
    completed: set[tuple[str, RecordId]] = set()
    for op in facts.ops:
        if op.kind == "append" and op.completed and op.record is not None:
            completed.add((op.ledger, op.record.rid))
    out: list[EffectiveAppend] = []
    for lc in cfg.ledgers:
        seen: dict[RecordId, tuple[Record, list[ProcessId]]] = {}
        for s in _correct_servers(cfg, lc.name):
            for record in _final_seq(facts, lc.name, s):
                if (lc.name, record.rid) in completed:
                    continue
                entry = seen.setdefault(record.rid, (record, []))
                entry[1].append(s)
        for record, servers in seen.values():
            out.append(EffectiveAppend(lc.name, record, tuple(servers)))
    out.sort(key=lambda e: (e.ledger, e.record.rid))
    return out


def _instance_presence(facts: TraceFacts, cfg: ScenarioConfig, inst) -> dict[ProcessId, tuple[bool, bool]]:
    """Per party: (record in any correct replica, record in every correct replica)."""
    out = {}
    for party in inst.party_ids():
        record = inst.base_record(party)
        ledger = inst.target_ledger(party)
        servers = _correct_servers(cfg, ledger)
        hits = [any(r.rid == record.rid for r in _final_seq(facts, ledger, s)) for s in servers]
        out[party] = (any(hits), bool(hits) and all(hits))
    return out


def check_aas(trace: Trace, cfg: ScenarioConfig, facts: TraceFacts | None = None) -> Verdict:
    """No correct party's record lands unless every party's record lands."""
    facts = facts if facts is not None else digest_trace(trace, cfg)
    byz = cfg.byzantine()
    checked = 0
    for inst in cfg.aa_instances:
        presence = _instance_presence(facts, cfg, inst)
        for party in inst.party_ids():
            if party in byz:
                continue
            checked += 1
            if not presence[party][0]:
                continue
            missing = [q for q in inst.party_ids() if q != party and not presence[q][1]]
            if missing:
                if not facts.quiescent:
                    return Verdict("aas", "inconclusive", "counterpart records still in flight at truncation")
                detail = (
                    f"instance {inst.name!r}: {party}'s record is appended but "
                    f"{', '.join(str(q) for q in missing)} records are not"
                )
                return Verdict("aas", "fail", detail, (inst.name, party, tuple(missing)))
    return Verdict("aas", "pass", f"{checked} correct-party obligations hold")


def check_aal(trace: Trace, cfg: ScenarioConfig, facts: TraceFacts | None = None) -> Verdict:
    """All-correct instances whose parties all posted must land completely."""
    facts = facts if facts is not None else digest_trace(trace, cfg)
    if not facts.quiescent:
        return Verdict("aal", "inconclusive", "run truncated before quiescence")
    byz = cfg.byzantine()
    from .atomic import make_aa_record

    posted: set[tuple[ProcessId, RecordId]] = set()
    for op in facts.ops:
        if op.kind == "append" and op.record is not None:
            posted.add((op.actor, op.record.rid))
    applicable = 0
    for inst in cfg.aa_instances:
        parties = inst.party_ids()
        if any(p in byz for p in parties):
            continue
        all_posted = True
        for p in parties:
            own = inst.base_record(p)
            others = {q: inst.base_record(q) for q in parties if q != p}
            descriptor = make_aa_record(p, parties, own, inst.target_ledger(p), others)
            if (p, descriptor.rid) not in posted:
                all_posted = False
                break
        if not all_posted:
            continue
        applicable += 1
        presence = _instance_presence(facts, cfg, inst)
        missing = [p for p in parties if not presence[p][1]]
        if missing:
            detail = f"instance {inst.name!r}: records of {', '.join(str(p) for p in missing)} never landed"
            return Verdict("aal", "fail", detail, (inst.name, tuple(missing)))
    if applicable == 0:
        return Verdict("aal", "pass", "no instance with all correct parties posting (vacuous)")
    return Verdict("aal", "pass", f"{applicable} instances landed completely")


def run_all(trace: Trace, cfg: ScenarioConfig) -> list[Verdict]:
    """Every checker applicable to this scenario, in report order."""
    facts = digest_trace(trace, cfg)
    verdicts = [
        check_bc(trace, cfg, facts),
        check_bsp(trace, cfg, facts),
        check_bl(trace, cfg, facts),
        check_server_agreement(trace, cfg, facts),
    ]
    if cfg.aa_instances:
        verdicts.append(check_aas(trace, cfg, facts))
        verdicts.append(check_aal(trace, cfg, facts))
    return verdicts
