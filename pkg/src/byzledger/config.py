"""Scenario configuration: JSON loading, validation, canonical digest.

A scenario file declares the ledgers, which processes are Byzantine and how,
the per-client workloads, and any atomic-append instances. Payload fields
are UTF-8 text. Process ids are written "kind:index", e.g. "server:2".

The digest covers a canonical re-serialization (sorted keys, no whitespace,
defaults filled in), so formatting changes do not invalidate recorded
traces but any semantic change does.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .clients import LedgerView
from .core import LedgerError, ProcessId, Record, WireFormatError, make_record

PROTOCOLS = ("u-bydl", "b-bydl", "sbdlo")

STRATEGY_KINDS = {
    "server_silent": "server",
    "server_wrong_get": "server",
    "server_no_echo": "server",
    "server_spurious_echo": "server",
    "server_half_append": "server",
    "helper_half_append": "helper",
    "client_partial_send": "client",
    "client_equivocate": "client",
    "client_non_member": "client",
}


class ConfigError(LedgerError):
    pass


@dataclass(frozen=True, slots=True)
class LedgerConfig:
    name: str
    protocol: str
    servers: tuple[ProcessId, ...]
    f: int
    t: int | None = None
    allowed_clients: tuple[ProcessId, ...] | None = None
    spray: str = "quorum"

    @property
    def quorum_param(self) -> int:
        # Smart coordination ledgers size quorums by their fault bound t.
        return self.t if self.protocol == "sbdlo" else self.f

    def view(self) -> LedgerView:
        return LedgerView(self.name, tuple(sorted(self.servers)), self.quorum_param, self.spray == "all")


@dataclass(frozen=True, slots=True)
class HelperConfig:
    ids: tuple[ProcessId, ...]
    t: int
    ledger: str
    poll_period: int = 10


@dataclass(frozen=True, slots=True)
class AdversaryConfig:
    strategy: str
    params: tuple[tuple[str, object], ...] = ()

    def get(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


@dataclass(frozen=True, slots=True)
class WorkItem:
    op: str  # "get" | "append" | "aa"
    ledger: str | None = None
    payload: bytes | None = None
    creator: ProcessId | None = None  # append a record created by someone else (co-signing)
    instance: str | None = None  # for "aa"


@dataclass(frozen=True, slots=True)
class AAInstanceConfig:
    name: str
    coordination: str
    parties: tuple[tuple[ProcessId, str, bytes], ...]  # (party, target ledger, payload), sorted

    def party_ids(self) -> tuple[ProcessId, ...]:
        return tuple(p for p, _, _ in self.parties)

    def base_record(self, party: ProcessId) -> Record:
        for p, _, payload in self.parties:
            if p == party:
                return make_record(p, payload)
        raise ConfigError(f"{party} is not a party of instance {self.name!r}")

    def target_ledger(self, party: ProcessId) -> str:
        for p, ledger, _ in self.parties:
            if p == party:
                return ledger
        raise ConfigError(f"{party} is not a party of instance {self.name!r}")


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    name: str
    ledgers: tuple[LedgerConfig, ...]
    seed: int = 1
    max_steps: int = 50_000
    fairness_factor: int = 4
    helpers: HelperConfig | None = None
    adversaries: tuple[tuple[ProcessId, AdversaryConfig], ...] = ()
    workload: tuple[tuple[ProcessId, tuple[WorkItem, ...]], ...] = ()
    aa_instances: tuple[AAInstanceConfig, ...] = ()
    unsafe_override: bool = False

    def ledger(self, name: str) -> LedgerConfig:
        for lc in self.ledgers:
            if lc.name == name:
                return lc
        raise ConfigError(f"unknown ledger {name!r}")

    def instance(self, name: str) -> AAInstanceConfig:
        for inst in self.aa_instances:
            if inst.name == name:
                return inst
        raise ConfigError(f"unknown instance {name!r}")

    def views(self) -> dict[str, LedgerView]:
        return {lc.name: lc.view() for lc in self.ledgers}

    def byzantine(self) -> frozenset[ProcessId]:
        return frozenset(pid for pid, _ in self.adversaries)

    def adversary_for(self, pid: ProcessId) -> AdversaryConfig | None:
        for p, adv in self.adversaries:
            if p == pid:
                return adv
        return None

    def processes(self) -> tuple[ProcessId, ...]:
        """Every process the scenario mentions, sorted."""
        out: set[ProcessId] = set()
        for lc in self.ledgers:
            out.update(lc.servers)
        if self.helpers:
            out.update(self.helpers.ids)
        out.update(pid for pid, _ in self.adversaries)
        out.update(pid for pid, _ in self.workload)
        for inst in self.aa_instances:
            out.update(inst.party_ids())
        return tuple(sorted(out))


def _pid(text: object, where: str) -> ProcessId:
    if not isinstance(text, str):
        raise ConfigError(f"{where}: process id must be a string, got {type(text).__name__}")
    try:
        return ProcessId.parse(text)
    except WireFormatError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _pids(items: object, where: str) -> tuple[ProcessId, ...]:
    if not isinstance(items, list):
        raise ConfigError(f"{where}: expected a list of process ids")
    return tuple(_pid(x, where) for x in items)


def _text(value: object, where: str, default: str | None = None) -> str:
    if value is None and default is not None:
        return default
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string")
    return value


def _num(value: object, where: str, default: int | None = None) -> int:
    if value is None and default is not None:
        return default
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{where}: expected an integer")
    return value


def _payload(value: object, where: str) -> bytes:
    return _text(value, where).encode("utf-8")


_LEDGER_KEYS = {"name", "protocol", "servers", "f", "t", "allowed_clients", "spray"}
_TOP_KEYS = {
    "name",
    "seed",
    "max_steps",
    "fairness_factor",
    "ledgers",
    "helpers",
    "adversaries",
    "workload",
    "aa_instances",
    "unsafe_override",
}


def parse_config(raw: object) -> ScenarioConfig:
    """Build a ScenarioConfig from parsed JSON; raises ConfigError on shape problems."""
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    name = _text(raw.get("name"), "name")
    ledgers = []
    raw_ledgers = raw.get("ledgers")
    if not isinstance(raw_ledgers, list) or not raw_ledgers:
        raise ConfigError("ledgers: expected a non-empty list")
    for i, entry in enumerate(raw_ledgers):
        where = f"ledgers[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected an object")
        bad = set(entry) - _LEDGER_KEYS
        if bad:
            raise ConfigError(f"{where}: unknown keys {sorted(bad)}")
        allowed = entry.get("allowed_clients")
        ledgers.append(
            LedgerConfig(
                name=_text(entry.get("name"), f"{where}.name"),
                protocol=_text(entry.get("protocol"), f"{where}.protocol"),
                servers=_pids(entry.get("servers"), f"{where}.servers"),
                f=_num(entry.get("f"), f"{where}.f"),
                t=None if entry.get("t") is None else _num(entry.get("t"), f"{where}.t"),
                allowed_clients=None if allowed is None else _pids(allowed, f"{where}.allowed_clients"),
                spray=_text(entry.get("spray"), f"{where}.spray", default="quorum"),
            )
        )
    helpers = None
    if raw.get("helpers") is not None:
        h = raw["helpers"]
        if not isinstance(h, dict):
            raise ConfigError("helpers: expected an object")
        bad = set(h) - {"ids", "t", "ledger", "poll_period"}
        if bad:
            raise ConfigError(f"helpers: unknown keys {sorted(bad)}")
        helpers = HelperConfig(
            ids=_pids(h.get("ids"), "helpers.ids"),
            t=_num(h.get("t"), "helpers.t"),
            ledger=_text(h.get("ledger"), "helpers.ledger"),
            poll_period=_num(h.get("poll_period"), "helpers.poll_period", default=10),
        )
    adversaries = []
    for pid_text, entry in sorted((raw.get("adversaries") or {}).items()):
        where = f"adversaries[{pid_text}]"
        pid = _pid(pid_text, where)
        if not isinstance(entry, dict) or "strategy" not in entry:
            raise ConfigError(f"{where}: expected an object with a strategy")
        strategy = _text(entry["strategy"], f"{where}.strategy")
        params = tuple(sorted((k, _freeze_param(v, f"{where}.{k}")) for k, v in entry.items() if k != "strategy"))
        adversaries.append((pid, AdversaryConfig(strategy, params)))
    workload = []
    for pid_text, items in sorted((raw.get("workload") or {}).items()):
        where = f"workload[{pid_text}]"
        pid = _pid(pid_text, where)
        if not isinstance(items, list):
            raise ConfigError(f"{where}: expected a list of operations")
        ops = []
        for j, op in enumerate(items):
            opw = f"{where}[{j}]"
            if not isinstance(op, dict):
                raise ConfigError(f"{opw}: expected an object")
            kind = _text(op.get("op"), f"{opw}.op")
            if kind == "get":
                ops.append(WorkItem("get", ledger=_text(op.get("ledger"), f"{opw}.ledger")))
            elif kind == "append":
                creator = op.get("creator")
                ops.append(
                    WorkItem(
                        "append",
                        ledger=_text(op.get("ledger"), f"{opw}.ledger"),
                        payload=_payload(op.get("payload"), f"{opw}.payload"),
                        creator=None if creator is None else _pid(creator, f"{opw}.creator"),
                    )
                )
            elif kind == "aa":
                ops.append(WorkItem("aa", instance=_text(op.get("instance"), f"{opw}.instance")))
            else:
                raise ConfigError(f"{opw}.op: unknown operation {kind!r}")
        workload.append((pid, tuple(ops)))
    instances = []
    for i, entry in enumerate(raw.get("aa_instances") or []):
        where = f"aa_instances[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected an object")
        parties_raw = entry.get("parties")
        if not isinstance(parties_raw, dict) or len(parties_raw) < 2:
            raise ConfigError(f"{where}.parties: expected an object with at least two parties")
        parties = []
        for pid_text, spec in sorted(parties_raw.items()):
            pw = f"{where}.parties[{pid_text}]"
            if not isinstance(spec, dict):
                raise ConfigError(f"{pw}: expected an object")
            parties.append((_pid(pid_text, pw), _text(spec.get("ledger"), f"{pw}.ledger"), _payload(spec.get("payload"), f"{pw}.payload")))
        instances.append(
            AAInstanceConfig(
                name=_text(entry.get("name"), f"{where}.name"),
                coordination=_text(entry.get("coordination"), f"{where}.coordination"),
                parties=tuple(parties),
            )
        )
    unsafe = raw.get("unsafe_override", False)
    if not isinstance(unsafe, bool):
        raise ConfigError("unsafe_override: expected a boolean")
    return ScenarioConfig(
        name=name,
        ledgers=tuple(ledgers),
        seed=_num(raw.get("seed"), "seed", default=1),
        max_steps=_num(raw.get("max_steps"), "max_steps", default=50_000),
        fairness_factor=_num(raw.get("fairness_factor"), "fairness_factor", default=4),
        helpers=helpers,
        adversaries=tuple(adversaries),
        workload=tuple(workload),
        aa_instances=tuple(instances),
        unsafe_override=unsafe,
    )


def _freeze_param(value: object, where: str):
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    if isinstance(value, list):
        return tuple(_freeze_param(v, where) for v in value)
    raise ConfigError(f"{where}: unsupported parameter type {type(value).__name__}")


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(raw)


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """All constraint violations, empty when the scenario is runnable."""
    problems: list[str] = []
    byz = cfg.byzantine()
    ledger_names = [lc.name for lc in cfg.ledgers]
    if len(set(ledger_names)) != len(ledger_names):
        problems.append("ledger names must be unique")
    for lc in cfg.ledgers:
        where = f"ledger {lc.name!r}"
        n = len(lc.servers)
        if lc.protocol not in PROTOCOLS:
            problems.append(f"{where}: unknown protocol {lc.protocol!r}")
            continue
        if len(set(lc.servers)) != n:
            problems.append(f"{where}: duplicate servers")
        if any(s.kind != "server" for s in lc.servers):
            problems.append(f"{where}: servers must have kind 'server'")
        if lc.spray not in ("quorum", "all"):
            problems.append(f"{where}: spray must be 'quorum' or 'all'")
        if lc.f < 0:
            problems.append(f"{where}: f must be non-negative")
        byz_servers = len(byz & set(lc.servers))
        if lc.protocol in ("u-bydl", "b-bydl"):
            if n < 3 * lc.f + 1 and not cfg.unsafe_override:
                problems.append(f"{where}: needs at least 3f+1 = {3 * lc.f + 1} servers, has {n}")
            if byz_servers > lc.f:
                problems.append(f"{where}: {byz_servers} Byzantine servers exceeds f = {lc.f}")
            if n < 2 * lc.f + 1:
                problems.append(f"{where}: fewer servers than the 2f+1 write quorum")
        if lc.protocol == "b-bydl":
            if lc.t is None:
                problems.append(f"{where}: b-bydl requires t")
            elif lc.allowed_clients is None:
                problems.append(f"{where}: b-bydl requires allowed_clients")
            else:
                if len(lc.allowed_clients) < 2 * lc.t + 1:
                    problems.append(f"{where}: needs at least 2t+1 = {2 * lc.t + 1} allowed clients")
                if len(set(lc.allowed_clients)) != len(lc.allowed_clients):
                    problems.append(f"{where}: duplicate allowed clients")
                byz_members = len(byz & set(lc.allowed_clients))
                if byz_members > lc.t:
                    problems.append(f"{where}: {byz_members} Byzantine allowed clients exceeds t = {lc.t}")
        if lc.protocol == "sbdlo":
            if lc.t is None:
                problems.append(f"{where}: sbdlo requires t")
            else:
                if n < 2 * lc.t + 1:
                    problems.append(f"{where}: needs at least 2t+1 = {2 * lc.t + 1} servers, has {n}")
                if byz_servers > lc.t:
                    problems.append(f"{where}: {byz_servers} Byzantine servers exceeds t = {lc.t}")
    known = {lc.name for lc in cfg.ledgers}
    if cfg.helpers is not None:
        h = cfg.helpers
        if any(p.kind != "helper" for p in h.ids):
            problems.append("helpers: ids must have kind 'helper'")
        if len(set(h.ids)) != len(h.ids):
            problems.append("helpers: duplicate ids")
        if len(h.ids) < 2 * h.t + 1:
            problems.append(f"helpers: needs at least 2t+1 = {2 * h.t + 1} helpers, has {len(h.ids)}")
        if len(byz & set(h.ids)) > h.t:
            problems.append(f"helpers: Byzantine helpers exceed t = {h.t}")
        if h.ledger not in known:
            problems.append(f"helpers: unknown ledger {h.ledger!r}")
        elif cfg.ledger(h.ledger).protocol != "u-bydl":
            problems.append("helpers: the polled coordination ledger must be u-bydl")
        if h.poll_period < 1:
            problems.append("helpers: poll_period must be at least 1")
    for pid, adv in cfg.adversaries:
        where = f"adversary {pid}"
        kind = STRATEGY_KINDS.get(adv.strategy)
        if kind is None:
            problems.append(f"{where}: unknown strategy {adv.strategy!r}")
            continue
        if pid.kind != kind:
            problems.append(f"{where}: strategy {adv.strategy} applies to {kind} processes")
        for ref in ("ledger",):
            value = adv.get(ref)
            if value is not None and value not in known:
                problems.append(f"{where}: unknown ledger {value!r}")
    for pid, items in cfg.workload:
        where = f"workload {pid}"
        if pid in byz:
            problems.append(f"{where}: Byzantine processes are driven by their strategy, not a workload")
        if pid.kind != "client":
            problems.append(f"{where}: only client processes take workloads")
        for item in items:
            if item.op in ("get", "append") and item.ledger not in known:
                problems.append(f"{where}: unknown ledger {item.ledger!r}")
            if item.op == "aa":
                try:
                    inst = cfg.instance(item.instance or "")
                except ConfigError:
                    problems.append(f"{where}: unknown instance {item.instance!r}")
                    continue
                if pid not in inst.party_ids():
                    problems.append(f"{where}: {pid} is not a party of {inst.name!r}")
    seen_instances = set()
    for inst in cfg.aa_instances:
        where = f"instance {inst.name!r}"
        if inst.name in seen_instances:
            problems.append(f"{where}: duplicate name")
        seen_instances.add(inst.name)
        if inst.coordination not in known:
            problems.append(f"{where}: unknown coordination ledger {inst.coordination!r}")
        for party, ledger, _ in inst.parties:
            if ledger not in known:
                problems.append(f"{where}: unknown target ledger {ledger!r} for {party}")
    if cfg.max_steps < 1:
        problems.append("max_steps must be positive")
    if cfg.fairness_factor < 1:
        problems.append("fairness_factor must be at least 1")
    if cfg.seed < 0:
        problems.append("seed must be non-negative")
    return problems


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out: dict = {
        "name": cfg.name,
        "seed": cfg.seed,
        "max_steps": cfg.max_steps,
        "fairness_factor": cfg.fairness_factor,
        "unsafe_override": cfg.unsafe_override,
        "ledgers": [
            {
                "name": lc.name,
                "protocol": lc.protocol,
                "servers": [str(s) for s in lc.servers],
                "f": lc.f,
                "t": lc.t,
                "allowed_clients": None if lc.allowed_clients is None else [str(c) for c in lc.allowed_clients],
                "spray": lc.spray,
            }
            for lc in cfg.ledgers
        ],
        "helpers": None
        if cfg.helpers is None
        else {
            "ids": [str(p) for p in cfg.helpers.ids],
            "t": cfg.helpers.t,
            "ledger": cfg.helpers.ledger,
            "poll_period": cfg.helpers.poll_period,
        },
        "adversaries": {
            str(pid): {"strategy": adv.strategy, **{k: _thaw_param(v) for k, v in adv.params}}
            for pid, adv in cfg.adversaries
        },
        "workload": {
            str(pid): [
                {
                    k: v
                    for k, v in {
                        "op": item.op,
                        "ledger": item.ledger,
                        "payload": None if item.payload is None else item.payload.decode("utf-8"),
                        "creator": None if item.creator is None else str(item.creator),
                        "instance": item.instance,
                    }.items()
                    if v is not None
                }
                for item in items
            ]
            for pid, items in cfg.workload
        },
        "aa_instances": [
            {
                "name": inst.name,
                "coordination": inst.coordination,
                "parties": {str(p): {"ledger": ledger, "payload": payload.decode("utf-8")} for p, ledger, payload in inst.parties},
            }
            for inst in cfg.aa_instances
        ],
    }
    return out


def _thaw_param(value):
    if isinstance(value, tuple):
        return [_thaw_param(v) for v in value]
    return value


def canonical_config_bytes(cfg: ScenarioConfig) -> bytes:
    return json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":")).encode("utf-8")


def config_digest(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(canonical_config_bytes(cfg)).hexdigest()
