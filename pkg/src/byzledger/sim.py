"""Deterministic discrete-event simulation of ledger scenarios.

One run executes a scenario under a seeded scheduler. Every step the world
enumerates the enabled events in a fixed canonical order (message
deliveries, broadcast sequencing, per-replica broadcast deliveries, client
invocations, helper polls) and the scheduler picks one. The same scenario
and seed always produce the same trace, byte for byte.

Fairness: each enabled event carries an age bound fixed when it became
enabled (the number of enabled events at that moment times the fairness
factor). An event older than its bound is executed before any random pick,
oldest first, so correct-to-correct messages cannot starve no matter how
unlucky the random choices are. The BYZLEDGER_FAIRNESS_FACTOR environment
variable overrides the configured factor.

A run ends at quiescence: no messages in flight, nothing pending in the
broadcasts, no replica behind, no workload left, and every helper has
completed a poll that started after the last coordination append and found
nothing new. Runs that hit max_steps first are marked truncated.
"""

from __future__ import annotations

import os
import random

from . import adversary as adv
from .atomic import HelperState, SmartServerState, helper_scan, smart_on_deliver, smart_on_request
from .bab import BabLog
from .clients import ClientState, invoke_append, invoke_get, on_response
from .config import AdversaryConfig, ScenarioConfig, canonical_config_bytes, config_digest
from .core import ClientRequest, LedgerError, OpTag, ProcessId, ServerResponse, make_record
from .servers import (
    BabSubmit,
    ClientCall,
    CosignServerState,
    PlainServerState,
    SendResponse,
    cosign_on_deliver,
    cosign_on_request,
    plain_on_deliver,
    plain_on_request,
)
from .clients import SendRequest
from .trace import Trace, TraceEvent

_REQUEST_HANDLERS = {"u-bydl": plain_on_request, "b-bydl": cosign_on_request, "sbdlo": smart_on_request}
_DELIVER_HANDLERS = {"u-bydl": plain_on_deliver, "b-bydl": cosign_on_deliver, "sbdlo": smart_on_deliver}


class RandomChooser:
    """Seeded uniform choice; honors fairness forcing."""

    respects_fairness = True

    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def choose(self, total: int) -> int:
        return self.rng.randrange(total)


class ScriptedChooser:
    """Replays a fixed choice prefix, then always picks 0; records fanouts."""

    respects_fairness = False

    def __init__(self, prefix: list[int] | None = None):
        self.prefix = list(prefix or [])
        self.taken: list[int] = []
        self.fanouts: list[int] = []

    def choose(self, total: int) -> int:
        k = self.prefix[len(self.taken)] if len(self.taken) < len(self.prefix) else 0
        if k >= total:
            k = 0
        self.taken.append(k)
        self.fanouts.append(total)
        return k


class _Ledger:
    __slots__ = ("cfg", "bab", "members", "last_append_step")

    def __init__(self, cfg, members):
        self.cfg = cfg
        self.members = members  # sorted
        self.bab = BabLog(cfg.name, members)
        self.last_append_step = 0


class _Proc:
    __slots__ = (
        "pid",
        "correct",
        "strategy",
        "server_states",
        "client",
        "helper",
        "workload",
        "wl_i",
        "blocked",
        "ready_since",
        "ready_bound",
        "start_acts",
        "half_scan",
    )

    def __init__(self, pid: ProcessId, correct: bool):
        self.pid = pid
        self.correct = correct
        self.strategy = None
        self.server_states: dict[str, object] = {}
        self.client = ClientState(pid)
        self.helper: HelperState | None = None
        self.workload: tuple = ()
        self.wl_i = 0
        self.blocked: OpTag | None = None
        self.ready_since = 0
        self.ready_bound = 0
        self.start_acts: list | None = None
        self.half_scan = False


def build_strategy(pid: ProcessId, spec: AdversaryConfig, cfg: ScenarioConfig):
    name = spec.strategy
    if name == "server_silent":
        return adv.ServerSilent()
    if name == "server_no_echo":
        return adv.ServerNoEcho()
    if name == "server_wrong_get":
        payload = str(spec.get("payload", "forged")).encode("utf-8")
        return adv.ServerWrongGet((make_record(pid, payload),))
    if name == "server_spurious_echo":
        ledger = spec.get("ledger")
        if ledger is None:
            raise LedgerError(f"{pid}: server_spurious_echo needs a ledger")
        claimed_text = spec.get("claimed_client")
        claimed = pid if claimed_text is None else ProcessId.parse(str(claimed_text))
        counter = int(spec.get("counter", 1))
        payload = str(spec.get("payload", "spurious")).encode("utf-8")
        return adv.ServerSpuriousEcho(str(ledger), OpTag(claimed, counter), make_record(claimed, payload))
    if name == "server_half_append":
        return adv.ServerHalfAppend()
    if name == "helper_half_append":
        return adv.HelperHalfAppend()
    if name == "client_partial_send":
        ledger = str(spec.get("ledger"))
        payload = str(spec.get("payload", "partial")).encode("utf-8")
        creator_text = spec.get("creator")
        creator = pid if creator_text is None else ProcessId.parse(str(creator_text))
        targets_raw = spec.get("targets")
        if targets_raw is None:
            view = cfg.ledger(ledger).view()
            targets = view.members[:1]
        else:
            targets = tuple(ProcessId.parse(str(t)) for t in targets_raw)
        return adv.ClientPartialSend(ledger, make_record(creator, payload), targets)
    if name == "client_equivocate":
        ledger = str(spec.get("ledger"))
        pa = str(spec.get("payload_a", "left")).encode("utf-8")
        pb = str(spec.get("payload_b", "right")).encode("utf-8")
        return adv.ClientEquivocate(ledger, make_record(pid, pa), make_record(pid, pb))
    if name == "client_non_member":
        ledger = str(spec.get("ledger"))
        payload = str(spec.get("payload", "outsider")).encode("utf-8")
        return adv.ClientNonMember(ledger, make_record(pid, payload))
    raise LedgerError(f"{pid}: unknown strategy {name!r}")


class World:
    """Mutable run state. Protocol logic stays in the pure handler modules."""

    def __init__(self, cfg: ScenarioConfig, seed: int | None = None, chooser=None):
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        self.chooser = chooser if chooser is not None else RandomChooser(self.seed)
        factor = cfg.fairness_factor
        env_factor = os.environ.get("BYZLEDGER_FAIRNESS_FACTOR")
        if env_factor is not None:
            try:
                factor = max(1, int(env_factor))
            except ValueError:
                pass
        self.fairness_factor = factor
        self.step = 0
        self.events: list[TraceEvent] = []
        self.outcome = "truncated"
        self.views = cfg.views()
        byz = cfg.byzantine()

        self.ledgers: dict[str, _Ledger] = {}
        self.ledger_names: list[str] = []
        for lc in cfg.ledgers:
            members = tuple(sorted(lc.servers))
            self.ledgers[lc.name] = _Ledger(lc, members)
            self.ledger_names.append(lc.name)
        self.ledger_names.sort()

        self.procs: dict[ProcessId, _Proc] = {}
        for pid in cfg.processes():
            self.procs[pid] = _Proc(pid, pid not in byz)
        workload = dict(cfg.workload)
        for pid, proc in self.procs.items():
            proc.workload = workload.get(pid, ())
        for pid, spec in cfg.adversaries:
            proc = self.procs[pid]
            proc.strategy = build_strategy(pid, spec, cfg)
            acts = adv.start_actions(proc.strategy, pid, self.views)
            proc.start_acts = acts if acts else None
            proc.half_scan = isinstance(proc.strategy, adv.HelperHalfAppend)
        for lc in cfg.ledgers:
            for s in lc.servers:
                proc = self.procs[s]
                if lc.protocol == "u-bydl":
                    proc.server_states[lc.name] = PlainServerState(s, lc.name, lc.f)
                elif lc.protocol == "b-bydl":
                    proc.server_states[lc.name] = CosignServerState(
                        s, lc.name, lc.f, lc.t or 0, frozenset(lc.allowed_clients or ())
                    )
                else:
                    proc.server_states[lc.name] = SmartServerState(s, lc.name, lc.t or 0)
        self.helper_ids: list[ProcessId] = []
        self.poll_period = 0
        self.coordination = None
        if cfg.helpers is not None:
            self.helper_ids = sorted(cfg.helpers.ids)
            self.poll_period = cfg.helpers.poll_period
            self.coordination = cfg.helpers.ledger
            for h in self.helper_ids:
                self.procs[h].helper = HelperState(h, cfg.helpers.ledger)
        self.next_poll: dict[ProcessId, int] = {h: 1 for h in self.helper_ids}
        self.poll_bound: dict[ProcessId, int] = {h: self.fairness_factor for h in self.helper_ids}
        self.clean_poll_init: dict[ProcessId, int] = {h: -1 for h in self.helper_ids}
        self.poll_tags: dict[OpTag, tuple[ProcessId, int]] = {}

        # (enq_step, bound, src, dest, ledger, body) in enqueue order
        self.msgs: list[tuple] = []
        self._last_total = 1
        self._sorted_procs = sorted(self.procs)

    # trace helpers

    def _event(self, kind: str, actor: ProcessId, body: tuple) -> None:
        self.events.append(TraceEvent(self.step, kind, actor, body))

    def _bound(self) -> int:
        return self.fairness_factor * max(1, self._last_total)

    def _send(self, src: ProcessId, dest: ProcessId, ledger: str, body) -> None:
        self._event("send", src, (dest, ledger, body))
        self.msgs.append((self.step, self._bound(), src, dest, ledger, body))

    # event enumeration; canonical order is msgs, sequencing, deliveries, invocations, polls

    def _invocation_ready(self, proc: _Proc) -> bool:
        if not proc.correct:
            return proc.start_acts is not None
        return proc.blocked is None and proc.wl_i < len(proc.workload)

    def _helper_clean(self, pid: ProcessId) -> bool:
        coord = self.ledgers[self.coordination]
        return self.clean_poll_init[pid] > coord.last_append_step

    def _counts(self):
        m = len(self.msgs)
        seqs = []
        dlvs = []
        for name in self.ledger_names:
            lrt = self.ledgers[name]
            seqs.append(len(lrt.bab.pending))
            for member in lrt.members:
                if lrt.bab.cursors[member] < len(lrt.bab.entries):
                    proc = self.procs[member]
                    if proc.correct or adv.consumes_deliveries(proc.strategy):
                        dlvs.append((name, member))
        invs = [pid for pid in self._sorted_procs if self._invocation_ready(self.procs[pid])]
        base_total = m + sum(seqs) + len(dlvs) + len(invs)
        # A helper polls while it has not yet taken a fruitless look at the
        # coordination ledger since the last append there. Later appends make
        # every helper unclean again, so polling resumes exactly when a new
        # match could exist; gating on cleanliness is what lets runs quiesce.
        polls = [h for h in self.helper_ids if self.step + 1 >= self.next_poll[h] and not self._helper_clean(h)]
        return m, seqs, dlvs, invs, polls, base_total + len(polls)

    def _overdue_index(self, m, seqs, dlvs, invs, polls) -> int | None:
        best = None
        best_key = None
        now = self.step
        idx = 0
        for i, msg in enumerate(self.msgs):
            if now - msg[0] > msg[1] and (best_key is None or msg[0] < best_key):
                best, best_key = idx + i, msg[0]
        idx += m
        for li, name in enumerate(self.ledger_names):
            bab = self.ledgers[name].bab
            for j, (_, enq, bound) in enumerate(bab.pending):
                if now - enq > bound and (best_key is None or enq < best_key):
                    best, best_key = idx + j, enq
            idx += seqs[li]
        for d, (name, member) in enumerate(dlvs):
            bab = self.ledgers[name].bab
            cursor = bab.cursors[member]
            enq = bab.entry_steps[cursor]
            if now - enq > bab.entry_bounds[cursor] and (best_key is None or enq < best_key):
                best, best_key = idx + d, enq
        idx += len(dlvs)
        for k, pid in enumerate(invs):
            proc = self.procs[pid]
            if now - proc.ready_since > proc.ready_bound and (best_key is None or proc.ready_since < best_key):
                best, best_key = idx + k, proc.ready_since
        idx += len(invs)
        for p, pid in enumerate(polls):
            due = self.next_poll[pid]
            if now - due > self.poll_bound[pid] and (best_key is None or due < best_key):
                best, best_key = idx + p, due
        return best

    def _execute(self, k: int, m, seqs, dlvs, invs, polls) -> None:
        if k < m:
            self._exec_msg(k)
            return
        k -= m
        for li, name in enumerate(self.ledger_names):
            if k < seqs[li]:
                self._exec_sequence(name, k)
                return
            k -= seqs[li]
        if k < len(dlvs):
            self._exec_deliver(*dlvs[k])
            return
        k -= len(dlvs)
        if k < len(invs):
            self._exec_invoke(invs[k])
            return
        k -= len(invs)
        self._exec_poll(polls[k])

    # executors

    def _exec_msg(self, i: int) -> None:
        _, _, src, dest, ledger, body = self.msgs.pop(i)
        self._event("receive", dest, (src, ledger, body))
        proc = self.procs.get(dest)
        if proc is None:
            return
        if isinstance(body, ClientRequest):
            state = proc.server_states.get(ledger)
            if state is None:
                return
            handler = _REQUEST_HANDLERS[self.ledgers[ledger].cfg.protocol]
            if proc.correct:
                new_state, actions = handler(state, body)
            else:
                new_state, actions = adv.wrap_request(proc.strategy, handler, state, body)
            proc.server_states[ledger] = new_state
            self._apply(dest, actions)
        elif isinstance(body, ServerResponse):
            if not proc.correct and proc.helper is None:
                # Byzantine clients and servers never act on responses, but a
                # Byzantine helper still drives its poll loop to completion.
                return
            new_client, completed = on_response(proc.client, body)
            proc.client = new_client
            if completed is None:
                return
            self._event("return", dest, (completed.ledger, completed.tag, completed.kind, completed.result, completed.record))
            if proc.blocked == completed.tag:
                proc.blocked = None
                proc.ready_since = self.step
                proc.ready_bound = self._bound()
            if completed.tag in self.poll_tags:
                self._finish_poll(dest, completed.tag, completed.result)

    def _exec_sequence(self, name: str, j: int) -> None:
        lrt = self.ledgers[name]
        env = lrt.bab.sequence(j, self.step, self._bound())
        self._event("bab_sequence", env.origin, (name, len(lrt.bab.entries) - 1, env))

    def _exec_deliver(self, name: str, member: ProcessId) -> None:
        lrt = self.ledgers[name]
        cursor, env = lrt.bab.deliver(member)
        self._event("bab_deliver", member, (name, cursor, env))
        proc = self.procs[member]
        state = proc.server_states[name]
        handler = _DELIVER_HANDLERS[lrt.cfg.protocol]
        if proc.correct:
            new_state, actions = handler(state, env)
        else:
            new_state, actions = adv.wrap_deliver(proc.strategy, handler, state, env)
        before = len(state.seq)
        after = len(new_state.seq)
        proc.server_states[name] = new_state
        for pos in range(before, after):
            self._event("state_append", member, (name, new_state.seq[pos], pos))
            if proc.correct:
                lrt.last_append_step = self.step
        self._apply(member, actions)

    def _exec_invoke(self, pid: ProcessId) -> None:
        proc = self.procs[pid]
        if not proc.correct:
            acts, proc.start_acts = proc.start_acts, None
            self._apply(pid, acts or [])
            return
        item = proc.workload[proc.wl_i]
        proc.wl_i += 1
        if item.op == "get":
            proc.blocked = self._client_invoke(pid, item.ledger, "get")
        elif item.op == "append":
            record = make_record(item.creator or pid, item.payload or b"")
            proc.blocked = self._client_invoke(pid, item.ledger, "append", record)
        else:
            from .atomic import make_aa_record

            inst = self.cfg.instance(item.instance or "")
            own = inst.base_record(pid)
            others = {p: inst.base_record(p) for p in inst.party_ids() if p != pid}
            descriptor = make_aa_record(pid, inst.party_ids(), own, inst.target_ledger(pid), others)
            proc.blocked = self._client_invoke(pid, inst.coordination, "append", descriptor)

    def _exec_poll(self, pid: ProcessId) -> None:
        self._event("helper_poll", pid, (self.coordination,))
        self.next_poll[pid] = self.step + self.poll_period
        self.poll_bound[pid] = self._bound()
        tag = self._client_invoke(pid, self.coordination, "get")
        self.poll_tags[tag] = (pid, self.step)

    def _finish_poll(self, pid: ProcessId, tag: OpTag, seq) -> None:
        hpid, init_step = self.poll_tags.pop(tag)
        proc = self.procs[hpid]
        scan = adv.half_append_scan if proc.half_scan else helper_scan
        new_helper, calls = scan(proc.helper, seq or ())
        proc.helper = new_helper
        if calls:
            for call in calls:
                self._client_invoke(hpid, call.ledger, "append", call.record)
        elif init_step > self.clean_poll_init[hpid]:
            self.clean_poll_init[hpid] = init_step

    def _client_invoke(self, pid: ProcessId, ledger: str, kind: str, record=None) -> OpTag:
        proc = self.procs[pid]
        view = self.views[ledger]
        if kind == "get":
            new_client, sends, tag = invoke_get(proc.client, view)
        else:
            new_client, sends, tag = invoke_append(proc.client, view, record)
        proc.client = new_client
        self._event("invoke", pid, (ledger, tag, kind, record))
        for s in sends:
            self._send(pid, s.dest, s.ledger, s.request)
        return tag

    def _apply(self, actor: ProcessId, actions) -> None:
        for action in actions:
            if isinstance(action, BabSubmit):
                self._event("bab_submit", actor, (action.ledger, action.payload))
                self.ledgers[action.ledger].bab.submit(actor, action.payload, self.step, self._bound())
            elif isinstance(action, SendResponse):
                self._send(actor, action.dest, action.ledger, action.response)
            elif isinstance(action, SendRequest):
                self._send(actor, action.dest, action.ledger, action.request)
            elif isinstance(action, ClientCall):
                self._client_invoke(actor, action.ledger, action.kind, action.record)

    # main loop

    def run(self) -> Trace:
        max_steps = self.cfg.max_steps
        while self.step < max_steps:
            m, seqs, dlvs, invs, polls, total = self._counts()
            if total == 0:
                if self.helper_ids:
                    pending_polls = [self.next_poll[h] for h in self.helper_ids if not self._helper_clean(h)]
                    if pending_polls:
                        # idle until the next unclean helper's poll is due
                        self.step = max(self.step + 1, min(pending_polls))
                        continue
                self.outcome = "quiescent"
                break
            self._last_total = total
            k = None
            if self.chooser.respects_fairness:
                k = self._overdue_index(m, seqs, dlvs, invs, polls)
            if k is None:
                k = self.chooser.choose(total)
            self.step += 1
            self._execute(k, m, seqs, dlvs, invs, polls)
        blob = canonical_config_bytes(self.cfg)
        return Trace(config_digest(self.cfg), blob, self.seed, self.events, self.outcome, self.step)


def run_scenario(cfg: ScenarioConfig, seed: int | None = None, chooser=None) -> Trace:
    return World(cfg, seed=seed, chooser=chooser).run()


def explore_schedules(cfg: ScenarioConfig, max_runs: int = 2000):
    """Depth-first enumeration of scheduler choices, for small scenarios.

    Yields (choices, trace) per distinct schedule and stops after max_runs.
    The final yield is followed by StopIteration; exhaustion within the
    budget can be detected by counting yields below max_runs.
    """
    prefix: list[int] = []
    runs = 0
    while runs < max_runs:
        chooser = ScriptedChooser(prefix)
        trace = World(cfg, seed=0, chooser=chooser).run()
        runs += 1
        yield tuple(chooser.taken), trace
        taken, fanouts = chooser.taken, chooser.fanouts
        j = len(taken) - 1
        while j >= 0 and taken[j] + 1 >= fanouts[j]:
            j -= 1
        if j < 0:
            return
        prefix = list(taken[:j]) + [taken[j] + 1]
