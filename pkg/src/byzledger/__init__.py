"""Byzantine-tolerant replicated ledgers with a deterministic test harness.

Protocol state machines (servers, clients, atomic multi-ledger appends), a
seeded discrete-event simulator with Byzantine strategies, and executable
checkers for the safety and liveness properties the protocols promise.
"""

from .checkers import (
    EffectiveAppend,
    Verdict,
    check_aal,
    check_aas,
    check_bc,
    check_bl,
    check_bsp,
    check_server_agreement,
    detect_effective_appends,
    run_all,
)
from .config import ConfigError, ScenarioConfig, load_config, parse_config, validate_config
from .core import (
    LedgerError,
    OpTag,
    ProcessId,
    Record,
    RecordId,
    canonical_decode,
    canonical_encode,
    is_prefix,
    make_record,
)
from .scenarios import builtin_names, builtin_scenario
from .sim import World, explore_schedules, run_scenario
from .trace import Trace, TraceFormatError, read_trace, write_trace

__all__ = [
    "EffectiveAppend",
    "Verdict",
    "check_aal",
    "check_aas",
    "check_bc",
    "check_bl",
    "check_bsp",
    "check_server_agreement",
    "detect_effective_appends",
    "run_all",
    "ConfigError",
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "validate_config",
    "LedgerError",
    "OpTag",
    "ProcessId",
    "Record",
    "RecordId",
    "canonical_decode",
    "canonical_encode",
    "is_prefix",
    "make_record",
    "builtin_names",
    "builtin_scenario",
    "World",
    "explore_schedules",
    "run_scenario",
    "Trace",
    "TraceFormatError",
    "read_trace",
    "write_trace",
]
