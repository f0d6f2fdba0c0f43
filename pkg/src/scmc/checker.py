"""Explicit-state reachability over a protocol composed with the monitors.

For cycle size k, the product of a protocol (data domain {0, 1, 2}) with one
write-order constraint per location and one violation check per processor
1..k is explored from all initial states.  A reachable state where every
check is in err yields a counterexample run whose fresh-value replay carries
a canonical k-nice cycle in its constraint graph; exhausting the product
without reaching one means no such cycle exists at this k.
"""
from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from typing import Optional

from . import monitors
from .errors import ParameterError, PreconditionError, ReplayError, SoundnessError
from .events import (
    READ,
    WRITE,
    Event,
    InternalEvent,
    MemoryEvent,
    Params,
    Run,
    Trace,
    event_to_json,
    project_trace,
)
from .monitors import (
    CheckAutomaton,
    CheckState,
    ConstrainAutomaton,
    ConstrainState,
    accepts,
    check_initial,
    check_step,
    constrain_step,
)
from .protocol import MemorySystem, replay, replay_unambiguous, permute_run
from .witness import NiceCycle, build_constraint_graph, verify_nice_cycle

DEFAULT_MAX_STATES = 50_000_000
_SUCC_CACHE_MAX = 1 << 18

_PHASE_INDEX = {monitors.A: 0, monitors.B: 1, monitors.ERR: 2}
_PHASES = (monitors.A, monitors.B, monitors.ERR)

NO_VIOLATION = "no_violation"
COUNTEREXAMPLE = "counterexample"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    k: int
    result: str
    states: int
    transitions: int
    max_depth: int
    run: Optional[Run] = None
    cycle: Optional[NiceCycle] = None
    trace: Optional[Trace] = None
    initial_state: Optional[object] = None

    def to_json(self) -> dict:
        out: dict = {
            "k": self.k,
            "result": self.result,
            "states": self.states,
            "transitions": self.transitions,
            "max_depth": self.max_depth,
            "run": None,
            "cycle": None,
            "unambiguous_trace": None,
            "initial_owners": None,
        }
        if self.run is not None:
            out["run"] = [event_to_json(e) for e in self.run.events]
        if self.cycle is not None:
            out["cycle"] = self.cycle.to_json()
        if self.trace is not None:
            out["unambiguous_trace"] = [event_to_json(e) for e in self.trace.events]
        owner = getattr(self.initial_state, "owner", None)
        if owner is not None:
            out["initial_owners"] = list(owner)
        return out


def _constrain_table(e: MemoryEvent, k: int):
    """(loc index, per-phase targets) for the one constraint a write touches,
    None for events no constraint reacts to.  Targets are phase indices or
    None for a blocked event."""
    if e.op != WRITE:
        return None
    targets = []
    for phase in (monitors.A, monitors.B):
        nxt = constrain_step(ConstrainState(e.loc, k, phase), e)
        targets.append(None if nxt is None else _PHASE_INDEX[nxt.phase])
    return e.loc - 1, tuple(targets)


def _check_table(e: MemoryEvent, k: int):
    if e.proc > k:
        return None
    targets = tuple(
        _PHASE_INDEX[check_step(CheckState(e.proc, k, phase), e).phase]
        for phase in _PHASES
    )
    if targets == (0, 1, 2):
        return None
    return e.proc - 1, targets


def extract_cycle(
    protocol: MemorySystem, run: Run, initial_state, k: int
) -> tuple[Trace, NiceCycle]:
    """Turn an accepted run into its unambiguous trace and verified cycle.

    u_x is the position where check x first leaves its initial phase, v_x
    the position where it first enters err; these positions, read in the
    fresh-value replay of the run, form a canonical k-nice cycle, which is
    re-verified against the constraint graph before being returned.
    """
    proj = project_trace(run)
    for j in range(1, protocol.m + 1):
        if not accepts(proj, ConstrainAutomaton(j, k)):
            raise PreconditionError(f"run rejected by the location-{j} constraint")
    for i in range(1, k + 1):
        if not accepts(proj, CheckAutomaton(i, k)):
            raise PreconditionError(f"run not accepted by the processor-{i} check")
    first_b: list[Optional[int]] = [None] * k
    first_err: list[Optional[int]] = [None] * k
    states = [check_initial(i, k) for i in range(1, k + 1)]
    for idx, e in enumerate(proj.events, 1):
        for ci in range(k):
            nxt = check_step(states[ci], e)
            if nxt.phase != states[ci].phase:
                if nxt.phase == monitors.B:
                    first_b[ci] = idx
                else:
                    first_err[ci] = idx
            states[ci] = nxt
    trace = replay_unambiguous(protocol, run, initial_state)
    vertices = []
    for ci in range(k):
        vertices.extend((first_b[ci], first_err[ci]))
    cycle = NiceCycle(
        vertices=tuple(vertices),
        procs=tuple(range(1, k + 1)),
        locs=tuple(x % k + 1 for x in range(1, k + 1)),
        canonical=True,
    )
    graph = build_constraint_graph(trace)
    if not verify_nice_cycle(graph, cycle):
        raise SoundnessError(f"extracted cycle {cycle} is not a cycle of the replay graph")
    return trace, cycle


def model_check(
    protocol: MemorySystem,
    k: int,
    max_states: int = DEFAULT_MAX_STATES,
    search: str = "bfs",
    threads: int = 1,
) -> Verdict:
    """Explore the monitor product at cycle size k until a violation or closure.

    BFS (the default) visits states in breadth order, so the first
    counterexample found is among the shortest; DFS may answer faster on
    violating systems but gives no such guarantee.  Exceeding max_states
    returns an inconclusive verdict rather than an error.
    """
    if protocol.v != 2:
        raise ParameterError(f"monitor composition requires v = 2, protocol has v = {protocol.v}")
    k_max = min(protocol.n, protocol.m)
    if not 1 <= k <= k_max:
        raise ParameterError(f"k {k} outside 1..{k_max}")
    if search not in ("bfs", "dfs"):
        raise ParameterError(f"search must be 'bfs' or 'dfs', got {search!r}")
    if max_states < 1:
        raise ParameterError(f"max_states must be >= 1, got {max_states}")
    if threads < 1:
        raise ParameterError(f"threads must be >= 1, got {threads}")

    m = protocol.m
    cons0 = (0,) * m
    chk0 = (0,) * k
    all_err = (2,) * k

    cons_tables: dict[MemoryEvent, object] = {}
    chk_tables: dict[MemoryEvent, object] = {}
    intern: dict[Event, Event] = {}
    succ_cache: dict = {}
    decode = getattr(protocol, "decode_state", None)

    if decode is not None:
        # States travel through the search as packed bytes and are rebuilt
        # on demand: deep searches then cost key bytes per state instead of
        # a retained object tree, and the successor cache stays bounded.
        def successors_of(x):
            s = succ_cache.get(x)
            if s is None:
                if len(succ_cache) >= _SUCC_CACHE_MAX:
                    succ_cache.clear()
                s = tuple(
                    (intern.setdefault(e, e), protocol.encode_state(ps2))
                    for e, ps2 in protocol.successors(decode(x))
                )
                succ_cache[x] = s
            return s

        def entry_of(ps):
            return protocol.encode_state(ps)

        def key_of(x) -> bytes:
            return x

    else:
        def successors_of(x):
            s = succ_cache.get(x)
            if s is None:
                s = tuple(
                    (intern.setdefault(e, e), ps2)
                    for e, ps2 in protocol.successors(x)
                )
                succ_cache[x] = s
            return s

        def entry_of(ps):
            return ps

        def key_of(x) -> bytes:
            return protocol.encode_state(x)

    def expand(x, cons, chk):
        out = []
        for e, x2 in successors_of(x):
            if type(e) is MemoryEvent:
                ct = cons_tables.get(e)
                if ct is None and e not in cons_tables:
                    ct = _constrain_table(e, k)
                    cons_tables[e] = ct
                if ct is not None:
                    jdx, targets = ct
                    nxt = targets[cons[jdx]]
                    if nxt is None:
                        continue  # constraint blocks this write
                    cons2 = cons if nxt == cons[jdx] else cons[:jdx] + (nxt,) + cons[jdx + 1 :]
                else:
                    cons2 = cons
                kt = chk_tables.get(e)
                if kt is None and e not in chk_tables:
                    kt = _check_table(e, k)
                    chk_tables[e] = kt
                if kt is not None:
                    idx, targets = kt
                    nxt = targets[chk[idx]]
                    chk2 = chk if nxt == chk[idx] else chk[:idx] + (nxt,) + chk[idx + 1 :]
                else:
                    chk2 = chk
            else:
                cons2, chk2 = cons, chk
            out.append((e, x2, cons2, chk2, key_of(x2) + bytes(cons2) + bytes(chk2)))
        return out

    visited: dict[bytes, tuple[Optional[bytes], Optional[Event]]] = {}
    roots: dict[bytes, object] = {}
    frontier: deque = deque()
    for ps in protocol.initial_states():
        x = entry_of(ps)
        key = key_of(x) + bytes(cons0) + bytes(chk0)
        if key in visited:
            continue
        visited[key] = (None, None)
        roots[key] = ps
        frontier.append((x, cons0, chk0, key, 0))
    states = len(visited)
    transitions = 0
    max_depth = 0

    def finish_counterexample(key2: bytes, depth: int) -> Verdict:
        events: list[Event] = []
        key = key2
        while True:
            parent, e = visited[key]
            if parent is None:
                init = roots[key]
                break
            events.append(e)
            key = parent
        events.reverse()
        run = Run(tuple(events), Params(protocol.n, protocol.m, 2))
        trace, cycle = extract_cycle(protocol, run, init, k)
        return Verdict(
            k, COUNTEREXAMPLE, states, transitions, depth, run, cycle, trace, init
        )

    executor = ThreadPoolExecutor(max_workers=threads) if (threads > 1 and search == "bfs") else None
    try:
        while frontier:
            if executor is None:
                x, cons, chk, key, depth = (
                    frontier.popleft() if search == "bfs" else frontier.pop()
                )
                if depth > max_depth:
                    max_depth = depth
                batches = [(key, depth, expand(x, cons, chk))]
                frontier_extend = frontier.append
            else:
                # level-synchronous parallel expansion; merge order matches
                # the serial schedule, so verdicts are identical
                level = list(frontier)
                frontier.clear()
                depth = level[0][4] if level else 0
                max_depth = max(max_depth, max(entry[4] for entry in level))
                results = executor.map(
                    lambda entry: expand(entry[0], entry[1], entry[2]),
                    level,
                    chunksize=max(1, len(level) // (threads * 4)),
                )
                batches = [
                    (entry[3], entry[4], out) for entry, out in zip(level, results)
                ]
                frontier_extend = frontier.append
            for key, depth, out in batches:
                for e, x2, cons2, chk2, key2 in out:
                    transitions += 1
                    if key2 in visited:
                        continue
                    visited[key2] = (key, e)
                    states += 1
                    if chk2 == all_err:
                        return finish_counterexample(key2, depth + 1)
                    if states > max_states:
                        return Verdict(k, INCONCLUSIVE, states, transitions, max_depth)
                    frontier_extend((x2, cons2, chk2, key2, depth + 1))
    finally:
        if executor is not None:
            executor.shutdown(wait=False, cancel_futures=True)
    return Verdict(k, NO_VIOLATION, states, transitions, max_depth)


def check_all_k(
    protocol: MemorySystem,
    max_states: int = DEFAULT_MAX_STATES,
    search: str = "bfs",
    threads: int = 1,
) -> list[Verdict]:
    """model_check for every k in 1..min(n, m), ascending."""
    return [
        model_check(protocol, k, max_states=max_states, search=search, threads=threads)
        for k in range(1, min(protocol.n, protocol.m) + 1)
    ]


def explore_protocol(protocol: MemorySystem, max_states: Optional[int] = None) -> tuple[int, int]:
    """Reachable (states, transitions) of the bare protocol, no monitors."""
    decode = getattr(protocol, "decode_state", None)
    visited: set[bytes] = set()
    frontier: deque = deque()
    for ps in protocol.initial_states():
        key = protocol.encode_state(ps)
        if key not in visited:
            visited.add(key)
            frontier.append(key if decode is not None else ps)
    transitions = 0
    while frontier:
        ps = frontier.popleft()
        if decode is not None:
            ps = decode(ps)
        for _e, ps2 in protocol.successors(ps):
            transitions += 1
            key = protocol.encode_state(ps2)
            if key not in visited:
                visited.add(key)
                if max_states is not None and len(visited) > max_states:
                    raise ParameterError(f"protocol exceeds {max_states} states")
                frontier.append(key if decode is not None else ps2)
    return len(visited), transitions


@dataclass(frozen=True)
class CausalityViolation:
    run: Run
    index: int

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "event": event_to_json(self.run.events[self.index - 1]),
            "run": [event_to_json(e) for e in self.run.events],
        }


@dataclass(frozen=True)
class SymmetryViolation:
    kind: str
    perm: tuple[int, ...]
    failed_at: int
    run: Run

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "perm": list(self.perm),
            "failed_at": self.failed_at,
            "run": [event_to_json(e) for e in self.run.events],
        }


@dataclass(frozen=True)
class AssumptionReport:
    depth: int
    nodes: int
    edges: int
    causality_violations: tuple[CausalityViolation, ...]
    runs_sampled: int
    symmetry_checks: int
    symmetry_violations: tuple[SymmetryViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.causality_violations and not self.symmetry_violations

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "nodes": self.nodes,
            "edges": self.edges,
            "causality_violations": [v.to_json() for v in self.causality_violations],
            "runs_sampled": self.runs_sampled,
            "symmetry_checks": self.symmetry_checks,
            "symmetry_violations": [v.to_json() for v in self.symmetry_violations],
            "ok": self.ok,
        }


_VIOLATION_CAP = 20


def validate_assumptions(
    protocol: MemorySystem,
    depth: int = 10,
    run_samples: int = 200,
    max_perms: int = 6,
) -> AssumptionReport:
    """Bounded empirical check of the causality and symmetry assumptions.

    Explores all runs up to `depth` events, collapsed to (state, values
    written so far per location) nodes, which preserves exactly what the
    causality check depends on.  A read of a nonzero value never written to
    its location is a causality violation in the run leading to it.  For a
    deterministic sample of runs, every processor and location permutation
    (up to max_perms each) is applied to the whole run and to its initial
    state; failure to replay the permuted run is a symmetry violation.
    """
    if depth < 0:
        raise ParameterError(f"depth must be >= 0, got {depth}")
    empty_written = (frozenset(),) * protocol.m

    visited: dict = {}
    roots: dict = {}
    frontier: deque = deque()
    for ps in protocol.initial_states():
        key = (protocol.encode_state(ps), empty_written)
        if key not in visited:
            visited[key] = (None, None)
            roots[key] = ps
            frontier.append((ps, empty_written, key, 0))

    causality: list[CausalityViolation] = []
    edges = 0

    def run_to(key, extra: Optional[Event] = None) -> tuple[Run, object]:
        events: list[Event] = [] if extra is None else [extra]
        while True:
            parent, e = visited[key]
            if parent is None:
                root = roots[key]
                break
            events.append(e)
            key = parent
        events.reverse()
        return Run(tuple(events), Params(protocol.n, protocol.m, protocol.v)), root

    while frontier:
        ps, written, key, d = frontier.popleft()
        if d == depth:
            continue
        for e, ps2 in protocol.successors(ps):
            edges += 1
            written2 = written
            if isinstance(e, MemoryEvent) and e.data != 0:
                values = written[e.loc - 1]
                if e.op == READ:
                    if e.data not in values and len(causality) < _VIOLATION_CAP:
                        run, _root = run_to(key, extra=e)
                        causality.append(CausalityViolation(run, len(run)))
                elif e.data not in values:
                    written2 = (
                        written[: e.loc - 1]
                        + (values | {e.data},)
                        + written[e.loc :]
                    )
            key2 = (protocol.encode_state(ps2), written2)
            if key2 not in visited:
                visited[key2] = (key, e)
                frontier.append((ps2, written2, key2, d + 1))

    keys = list(visited)
    stride = max(1, len(keys) // run_samples) if run_samples > 0 else len(keys) + 1
    sampled = keys[::stride][:run_samples]
    proc_perms = [p for p in permutations(range(1, protocol.n + 1))][1:][:max_perms]
    loc_perms = [p for p in permutations(range(1, protocol.m + 1))][1:][:max_perms]

    symmetry: list[SymmetryViolation] = []
    checks = 0
    for key in sampled:
        run, root = run_to(key)
        for kind, perms in (("proc", proc_perms), ("loc", loc_perms)):
            for perm in perms:
                checks += 1
                permuted = permute_run(protocol, run, kind, perm)
                permuted_init = protocol.permute_state(root, kind, perm)
                try:
                    replay(protocol, permuted, permuted_init)
                except ReplayError as exc:
                    if len(symmetry) < _VIOLATION_CAP:
                        symmetry.append(
                            SymmetryViolation(kind, perm, exc.index, run)
                        )
    return AssumptionReport(
        depth=depth,
        nodes=len(visited),
        edges=edges,
        causality_violations=tuple(causality),
        runs_sampled=len(sampled),
        symmetry_checks=checks,
        symmetry_violations=tuple(symmetry),
    )
