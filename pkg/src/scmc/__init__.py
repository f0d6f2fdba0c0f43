"""Sequential-consistency model checking for finite cache-coherence protocols.

Three layers:

- trace analysis: constraint graphs over unambiguous causal traces, whose
  acyclicity under the simple per-location write order certifies sequential
  consistency, with cycles reduced to canonical k-nice form;
- monitors: constant-size automata (one write-order constraint per location,
  one violation check per processor) whose product with a protocol turns
  cycle detection into reachability;
- checking: explicit-state search over the product, counterexample replay
  with fresh values, and an exhaustive oracle for short traces.
"""

from .analysis import (
    ORACLE_BOUND_DEFAULT,
    SerialWitness,
    check_sc_oracle,
    is_causal,
    is_serial,
    is_unambiguous,
    respects_program_order,
)
from .checker import (
    COUNTEREXAMPLE,
    DEFAULT_MAX_STATES,
    INCONCLUSIVE,
    NO_VIOLATION,
    AssumptionReport,
    Verdict,
    check_all_k,
    explore_protocol,
    extract_cycle,
    model_check,
    validate_assumptions,
)
from .errors import (
    DataIndependenceError,
    DisabledEventError,
    FormatError,
    OracleBoundError,
    ParameterError,
    PreconditionError,
    RenamingDomainError,
    ReplayError,
    ScmcError,
    SoundnessError,
)
from .events import (
    READ,
    WRITE,
    InternalEvent,
    MemoryEvent,
    Params,
    RenamingFunction,
    Run,
    Trace,
    dump_jsonl,
    dumps_jsonl,
    identity_renaming,
    load_run_jsonl,
    loads_run_jsonl,
    loc_indices,
    permute_locs,
    permute_procs,
    proc_indices,
    project_trace,
    read_indices,
    rename_data,
    write_indices,
)
from .monitors import (
    CheckAutomaton,
    ConstrainAutomaton,
    MONITOR_DATA_DOMAIN,
    accepts,
)
from .protocol import (
    DEFAULT_QUEUE_BOUND,
    PROTOCOL_NAMES,
    MemorySystem,
    PiranhaProtocol,
    PiranhaState,
    make_protocol,
    permute_run,
    replay,
    replay_unambiguous,
)
from .witness import (
    SIMPLE_WITNESS,
    ConstraintGraph,
    NiceCycle,
    SimpleWitness,
    build_constraint_graph,
    expanded_order,
    find_cycle,
    find_minimal_nice_cycle,
    find_nice_cycle,
    verify_nice_cycle,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "CheckAutomaton",
    "ConstrainAutomaton",
    "ConstraintGraph",
    "COUNTEREXAMPLE",
    "DataIndependenceError",
    "DEFAULT_MAX_STATES",
    "DEFAULT_QUEUE_BOUND",
    "DisabledEventError",
    "FormatError",
    "INCONCLUSIVE",
    "InternalEvent",
    "MemoryEvent",
    "MemorySystem",
    "MONITOR_DATA_DOMAIN",
    "NO_VIOLATION",
    "NiceCycle",
    "ORACLE_BOUND_DEFAULT",
    "OracleBoundError",
    "Params",
    "ParameterError",
    "PiranhaProtocol",
    "PiranhaState",
    "PreconditionError",
    "PROTOCOL_NAMES",
    "READ",
    "RenamingDomainError",
    "RenamingFunction",
    "ReplayError",
    "Run",
    "ScmcError",
    "SerialWitness",
    "SIMPLE_WITNESS",
    "SimpleWitness",
    "SoundnessError",
    "Trace",
    "Verdict",
    "WRITE",
    "accepts",
    "build_constraint_graph",
    "check_all_k",
    "check_sc_oracle",
    "dump_jsonl",
    "dumps_jsonl",
    "expanded_order",
    "explore_protocol",
    "extract_cycle",
    "find_cycle",
    "find_minimal_nice_cycle",
    "find_nice_cycle",
    "identity_renaming",
    "is_causal",
    "is_serial",
    "is_unambiguous",
    "load_run_jsonl",
    "loads_run_jsonl",
    "loc_indices",
    "proc_indices",
    "read_indices",
    "write_indices",
    "make_protocol",
    "model_check",
    "permute_locs",
    "permute_procs",
    "permute_run",
    "project_trace",
    "rename_data",
    "replay",
    "replay_unambiguous",
    "respects_program_order",
    "validate_assumptions",
    "verify_nice_cycle",
]
