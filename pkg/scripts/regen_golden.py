#!/usr/bin/env python3
"""Regenerate the golden traces used by the determinism acceptance test.

Every built-in scenario is run once at a fixed seed and its trace written to
tests/golden/. Rerun this after any change that affects scheduling, protocol
messages, scenario definitions, or the trace format, and review the diff
like any other code change.
"""

from __future__ import annotations

import argparse
import os

from byzledger.scenarios import builtin_names, builtin_scenario
from byzledger.sim import run_scenario
from byzledger.trace import write_trace

GOLDEN_SEED = 7


def main() -> int:
    default_dir = os.path.normpath(os.path.join(os.path.dirname(__file__), os.pardir, "tests", "golden"))
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=default_dir, help="directory for the golden traces")
    parser.add_argument("--seed", type=int, default=GOLDEN_SEED)
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name in builtin_names():
        cfg = builtin_scenario(name)
        trace = run_scenario(cfg, seed=args.seed)
        path = os.path.join(args.out, f"{name}.trace")
        write_trace(path, trace)
        print(f"{name}: {trace.outcome} after {trace.steps} steps, {len(trace.events)} events")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
