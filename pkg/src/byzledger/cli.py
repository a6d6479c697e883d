"""Command-line front end.

    byzledger run <config-or-builtin> [--seed N] [--seeds A:B] [--out DIR]
    byzledger check <trace> [--out DIR]
    byzledger replay <trace>
    byzledger validate <config>
    byzledger list

Exit codes: 0 all checked properties pass, 1 at least one property failed
or a replay diverged, 2 usage, configuration, or file-format errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .checkers import detect_effective_appends, run_all
from .config import ConfigError, ScenarioConfig, load_config, parse_config, validate_config
from .scenarios import builtin_names, builtin_scenario
from .sim import run_scenario
from .trace import Trace, TraceFormatError, read_trace, write_trace

USAGE_ERROR = 2
PROPERTY_ERROR = 1


def _resolve_config(spec: str) -> ScenarioConfig:
    if os.path.exists(spec):
        return load_config(spec)
    try:
        return builtin_scenario(spec)
    except KeyError:
        raise ConfigError(f"{spec!r} is neither a config file nor a built-in scenario") from None


def _validated(cfg: ScenarioConfig) -> ScenarioConfig:
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def _report(trace: Trace, cfg: ScenarioConfig, out_dir: str | None, stem: str) -> int:
    verdicts = run_all(trace, cfg)
    effective = detect_effective_appends(trace, cfg)
    lines = []
    for v in verdicts:
        print(f"{v.prop}: {v.status}  {v.detail}")
        lines.append({"prop": v.prop, "status": v.status, "detail": v.detail})
    print(f"effective_appends: {len(effective)}")
    for entry in effective:
        print(f"  {entry.ledger}: record {entry.record.rid} by {entry.record.creator} at {len(entry.servers)} replicas")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        report_path = os.path.join(out_dir, f"{stem}.report.jsonl")
        with open(report_path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
            fh.write(
                json.dumps(
                    {
                        "effective_appends": [
                            {"ledger": e.ledger, "record": e.record.rid.hex, "servers": [str(s) for s in e.servers]}
                            for e in effective
                        ]
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    return PROPERTY_ERROR if any(v.status == "fail" for v in verdicts) else 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _validated(_resolve_config(args.config))
    if args.seeds:
        lo, _, hi = args.seeds.partition(":")
        try:
            seeds = range(int(lo), int(hi) + 1)
        except ValueError:
            raise ConfigError(f"--seeds wants A:B, got {args.seeds!r}") from None
    else:
        seeds = [cfg.seed if args.seed is None else args.seed]
    worst = 0
    for seed in seeds:
        trace = run_scenario(cfg, seed=seed)
        stem = f"{cfg.name}-seed{seed}"
        print(f"== {stem}: {trace.outcome} after {trace.steps} steps, {len(trace.events)} events")
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            write_trace(os.path.join(args.out, f"{stem}.trace"), trace)
        worst = max(worst, _report(trace, cfg, args.out, stem))
    return worst


def cmd_check(args: argparse.Namespace) -> int:
    trace = read_trace(args.trace)
    cfg = parse_config(json.loads(trace.config_blob.decode("utf-8")))
    stem = os.path.splitext(os.path.basename(args.trace))[0]
    print(f"== {cfg.name} seed {trace.seed}: {trace.outcome} after {trace.steps} steps")
    return _report(trace, cfg, args.out, stem)


def cmd_replay(args: argparse.Namespace) -> int:
    recorded = read_trace(args.trace)
    cfg = parse_config(json.loads(recorded.config_blob.decode("utf-8")))
    fresh = run_scenario(cfg, seed=recorded.seed)
    if fresh.events == recorded.events and fresh.outcome == recorded.outcome:
        print(f"replay ok: {len(recorded.events)} events match")
        return 0
    limit = min(len(fresh.events), len(recorded.events))
    divergence = next((i for i in range(limit) if fresh.events[i] != recorded.events[i]), limit)
    print(f"replay DIVERGED at event {divergence} (recorded {len(recorded.events)} events, fresh {len(fresh.events)})")
    return PROPERTY_ERROR


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    problems = validate_config(cfg)
    if problems:
        for p in problems:
            print(f"invalid: {p}")
        return USAGE_ERROR
    print(f"ok: scenario {cfg.name!r} with {len(cfg.ledgers)} ledgers, {len(cfg.processes())} processes")
    return 0


def cmd_list(_args: argparse.Namespace) -> int:
    for name in builtin_names():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="byzledger", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and check its properties")
    p_run.add_argument("config", help="config file path or built-in scenario name")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--seeds", default=None, help="inclusive seed range A:B")
    p_run.add_argument("--out", default=None, help="directory for trace and report files")
    p_run.set_defaults(fn=cmd_run)

    p_check = sub.add_parser("check", help="re-check a recorded trace")
    p_check.add_argument("trace")
    p_check.add_argument("--out", default=None)
    p_check.set_defaults(fn=cmd_check)

    p_replay = sub.add_parser("replay", help="re-execute a trace and verify it reproduces")
    p_replay.add_argument("trace")
    p_replay.set_defaults(fn=cmd_replay)

    p_val = sub.add_parser("validate", help="check a config file without running it")
    p_val.add_argument("config")
    p_val.set_defaults(fn=cmd_validate)

    p_list = sub.add_parser("list", help="print built-in scenario names")
    p_list.set_defaults(fn=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, TraceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
