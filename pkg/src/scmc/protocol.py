"""Finite cache-coherence protocols as explicit-state transition systems.

A MemorySystem exposes initial states, an enabled-event relation and a
deterministic step function over immutable states.  The shipped protocol is
a directory-less invalidation protocol in the style of Piranha's L2: each
processor holds a cache line per location in state INV, SHD or EXC, requests
travel through per-processor FIFO queues as ACKS/ACKX/INVAL messages, and a
per-location owner variable serializes requests (owner 0 means a request is
in flight).  The buggy variant omits the owner reset in the shared-access
grant, which lets a second grant race the first one's acknowledgment.

Queues are bounded by guard strengthening: an event whose body would append
to a full queue is disabled, never an error.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from itertools import product
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .errors import (
    DataIndependenceError,
    DisabledEventError,
    ParameterError,
    ReplayError,
)
from .events import (
    READ,
    WRITE,
    Event,
    InternalEvent,
    MemoryEvent,
    Params,
    Run,
    Trace,
    check_permutation,
)

INV, SHD, EXC = 0, 1, 2
STATUS_NAMES = ("INV", "SHD", "EXC")

ACKS_MSG, ACKX_MSG, INVAL_MSG = 0, 1, 2
MSG_NAMES = ("ACKS", "ACKX", "INVAL")

DEFAULT_QUEUE_BOUND = 3


class Msg(NamedTuple):
    """A queued coherence message; data is None exactly for INVAL."""

    kind: int
    addr: int
    data: Optional[int] = None


class PiranhaState(NamedTuple):
    """cache[i-1][j-1] is a (data, status) pair; owner[j-1] is 0 or a processor."""

    cache: tuple[tuple[tuple[int, int], ...], ...]
    owner: tuple[int, ...]
    inq: tuple[tuple[Msg, ...], ...]


def _flatten(obj, out: bytearray) -> None:
    if obj is None:
        out.append(251)
    elif isinstance(obj, int):
        if 0 <= obj < 240:
            out.append(obj)
        else:
            out.append(252)
            out.extend(obj.to_bytes(8, "little", signed=True))
    elif isinstance(obj, tuple):
        out.append(253)
        _flatten(len(obj), out)
        for item in obj:
            _flatten(item, out)
    else:
        raise ParameterError(f"cannot encode {obj!r}")


class MemorySystem(ABC):
    """A finite transition system over the shared event alphabet."""

    n: int
    m: int
    v: int
    internal_events: Mapping[str, tuple[str, ...]] = {}

    @abstractmethod
    def initial_states(self) -> tuple:
        ...

    @abstractmethod
    def enabled(self, state) -> tuple[Event, ...]:
        ...

    @abstractmethod
    def step(self, state, event):
        """The successor under `event`; DisabledEventError if its guard fails."""

    def successors(self, state) -> tuple[tuple[Event, object], ...]:
        return tuple((e, self.step(state, e)) for e in self.enabled(state))

    def encode_state(self, state) -> bytes:
        """A canonical byte key for visited sets; equal states encode equally."""
        out = bytearray()
        _flatten(state, out)
        return bytes(out)

    def permute_state(self, state, kind: str, perm: Sequence[int]):
        raise NotImplementedError(f"{type(self).__name__} does not support symmetry")


def _set_cache(cache, i: int, j: int, entry):
    row = cache[i - 1]
    row = row[: j - 1] + (entry,) + row[j:]
    return cache[: i - 1] + (row,) + cache[i:]


class PiranhaProtocol(MemorySystem):
    internal_events = {"ACKX": ("proc", "loc"), "ACKS": ("proc", "loc"), "UPD": ("proc",)}

    def __init__(
        self,
        n: int,
        m: int,
        v: int = 2,
        queue_bound: int = DEFAULT_QUEUE_BOUND,
        buggy: bool = False,
    ):
        params = Params(n, m, v)  # range validation
        if queue_bound < 1:
            raise ParameterError(f"queue_bound must be >= 1, got {queue_bound}")
        self.n, self.m, self.v = params.n, params.m, params.v
        self.queue_bound = queue_bound
        self.buggy = buggy

    # -- states -------------------------------------------------------------

    def initial_state(self, owner: Sequence[int]) -> PiranhaState:
        owner = tuple(owner)
        if len(owner) != self.m or not all(1 <= o <= self.n for o in owner):
            raise ParameterError(
                f"owner vector must assign each of {self.m} locations a processor 1..{self.n}"
            )
        row = ((0, SHD),) * self.m
        return PiranhaState((row,) * self.n, owner, ((),) * self.n)

    def initial_states(self) -> tuple[PiranhaState, ...]:
        return tuple(
            self.initial_state(owner)
            for owner in product(range(1, self.n + 1), repeat=self.m)
        )

    # -- guards -------------------------------------------------------------

    def _ackx_recipients(self, state: PiranhaState, i: int, j: int) -> list[int]:
        # the old owner never receives INVAL: it is invalidated directly,
        # or it is the requester itself
        old = state.owner[j - 1]
        recips = []
        for p in range(1, self.n + 1):
            if p == i:
                recips.append(p)
            elif p != old and state.cache[p - 1][j - 1][1] != INV:
                recips.append(p)
        return recips

    def _ackx_enabled(self, state: PiranhaState, i: int, j: int) -> bool:
        if state.cache[i - 1][j - 1][1] == EXC or state.owner[j - 1] == 0:
            return False
        q = self.queue_bound
        return all(
            len(state.inq[p - 1]) < q for p in self._ackx_recipients(state, i, j)
        )

    def _acks_enabled(self, state: PiranhaState, i: int, j: int) -> bool:
        return (
            state.cache[i - 1][j - 1][1] == INV
            and state.owner[j - 1] != 0
            and len(state.inq[i - 1]) < self.queue_bound
        )

    # -- bodies -------------------------------------------------------------

    def _do_ackx(self, state: PiranhaState, i: int, j: int) -> PiranhaState:
        cache, owner, inq = state
        old = owner[j - 1]
        if old != i:
            cache = _set_cache(cache, old, j, (cache[old - 1][j - 1][0], INV))
        # capture the old owner's data before zeroing; zeroing first would
        # leave nothing to read the reply data from
        data = cache[old - 1][j - 1][0]
        owner = owner[: j - 1] + (0,) + owner[j:]
        queues = list(inq)
        for p in range(1, self.n + 1):
            if p == i:
                queues[p - 1] = queues[p - 1] + (Msg(ACKX_MSG, j, data),)
            elif p != old and cache[p - 1][j - 1][1] != INV:
                queues[p - 1] = queues[p - 1] + (Msg(INVAL_MSG, j),)
        return PiranhaState(cache, owner, tuple(queues))

    def _do_acks(self, state: PiranhaState, i: int, j: int) -> PiranhaState:
        cache, owner, inq = state
        old = owner[j - 1]
        cache = _set_cache(cache, old, j, (cache[old - 1][j - 1][0], SHD))
        data = cache[old - 1][j - 1][0]
        if not self.buggy:
            owner = owner[: j - 1] + (0,) + owner[j:]  # the bug: this reset is skipped
        inq = inq[: i - 1] + (inq[i - 1] + (Msg(ACKS_MSG, j, data),),) + inq[i:]
        return PiranhaState(cache, owner, inq)

    def _do_upd(self, state: PiranhaState, i: int) -> PiranhaState:
        cache, owner, inq = state
        queue = inq[i - 1]
        msg = queue[0]
        inq = inq[: i - 1] + (queue[1:],) + inq[i:]
        a = msg.addr
        if msg.kind == INVAL_MSG:
            cache = _set_cache(cache, i, a, (cache[i - 1][a - 1][0], INV))
        else:
            status = SHD if msg.kind == ACKS_MSG else EXC
            cache = _set_cache(cache, i, a, (msg.data, status))
            owner = owner[: a - 1] + (i,) + owner[a:]
        return PiranhaState(cache, owner, inq)

    # -- transition relation --------------------------------------------------

    def enabled(self, state: PiranhaState) -> tuple[Event, ...]:
        return tuple(e for e, _ in self.successors(state))

    def step(self, state: PiranhaState, event: Event):
        if isinstance(event, MemoryEvent):
            i, j = event.proc, event.loc
            if not (1 <= i <= self.n and 1 <= j <= self.m and event.data >= 0):
                raise ParameterError(f"event out of range: {event!r}")
            d, s = state.cache[i - 1][j - 1]
            if event.op == READ:
                if s == INV or d != event.data:
                    raise DisabledEventError(f"{event!r}: cache holds ({d}, {STATUS_NAMES[s]})")
                return state
            if event.op != WRITE:
                raise ParameterError(f"bad op in {event!r}")
            if s != EXC:
                raise DisabledEventError(f"{event!r}: line not exclusive")
            return PiranhaState(
                _set_cache(state.cache, i, j, (event.data, EXC)), state.owner, state.inq
            )
        if not isinstance(event, InternalEvent):
            raise ParameterError(f"not an event: {event!r}")
        label, params = event.label, event.params
        if label == "UPD":
            if len(params) != 1 or not 1 <= params[0] <= self.n:
                raise ParameterError(f"bad params in {event!r}")
            if not state.inq[params[0] - 1]:
                raise DisabledEventError(f"{event!r}: queue empty")
            return self._do_upd(state, params[0])
        if label in ("ACKX", "ACKS"):
            if len(params) != 2 or not (
                1 <= params[0] <= self.n and 1 <= params[1] <= self.m
            ):
                raise ParameterError(f"bad params in {event!r}")
            i, j = params
            if label == "ACKX":
                if not self._ackx_enabled(state, i, j):
                    raise DisabledEventError(f"{event!r}: guard false")
                return self._do_ackx(state, i, j)
            if not self._acks_enabled(state, i, j):
                raise DisabledEventError(f"{event!r}: guard false")
            return self._do_acks(state, i, j)
        raise ParameterError(f"unknown internal event label {label!r}")

    def successors(self, state: PiranhaState) -> tuple[tuple[Event, object], ...]:
        """Enabled events with their successor states, in a fixed order:
        reads, writes, ACKX, ACKS, UPD, each ascending in (proc, loc, data)."""
        n, m, v = self.n, self.m, self.v
        cache, owner, inq = state
        out: list[tuple[Event, object]] = []
        for i in range(1, n + 1):
            row = cache[i - 1]
            for j in range(1, m + 1):
                d, s = row[j - 1]
                if s != INV:
                    out.append((MemoryEvent(READ, i, j, d), state))
        for i in range(1, n + 1):
            row = cache[i - 1]
            for j in range(1, m + 1):
                if row[j - 1][1] == EXC:
                    for data in range(v + 1):
                        succ = PiranhaState(
                            _set_cache(cache, i, j, (data, EXC)), owner, inq
                        )
                        out.append((MemoryEvent(WRITE, i, j, data), succ))
        for i in range(1, n + 1):
            for j in range(1, m + 1):
                if self._ackx_enabled(state, i, j):
                    out.append((InternalEvent("ACKX", (i, j)), self._do_ackx(state, i, j)))
        for i in range(1, n + 1):
            for j in range(1, m + 1):
                if self._acks_enabled(state, i, j):
                    out.append((InternalEvent("ACKS", (i, j)), self._do_acks(state, i, j)))
        for i in range(1, n + 1):
            if inq[i - 1]:
                out.append((InternalEvent("UPD", (i,)), self._do_upd(state, i)))
        return tuple(out)

    # -- misc ----------------------------------------------------------------

    def encode_state(self, state: PiranhaState) -> bytes:
        out = bytearray()
        for row in state.cache:
            for d, s in row:
                out.append(d)
                out.append(s)
        out.extend(state.owner)
        for queue in state.inq:
            out.append(len(queue))
            for kind, addr, data in queue:
                out.append(kind)
                out.append(addr)
                out.append(0 if data is None else data)
        return bytes(out)

    def decode_state(self, key: bytes) -> PiranhaState:
        """Inverse of encode_state; lets searches keep states as packed bytes."""
        n, m = self.n, self.m
        pos = 0
        cache = []
        for _ in range(n):
            row = tuple(
                (key[pos + 2 * j], key[pos + 2 * j + 1]) for j in range(m)
            )
            cache.append(row)
            pos += 2 * m
        owner = tuple(key[pos : pos + m])
        pos += m
        queues = []
        for _ in range(n):
            length = key[pos]
            pos += 1
            queue = []
            for _ in range(length):
                kind, addr, data = key[pos], key[pos + 1], key[pos + 2]
                pos += 3
                queue.append(Msg(kind, addr, None if kind == INVAL_MSG else data))
            queues.append(tuple(queue))
        if pos != len(key):
            raise ParameterError("malformed state key")
        return PiranhaState(tuple(cache), owner, tuple(queues))

    def permute_state(self, state: PiranhaState, kind: str, perm: Sequence[int]):
        cache, owner, inq = state
        if kind == "proc":
            perm = check_permutation(perm, self.n)
            new_cache: list = [None] * self.n
            new_inq: list = [None] * self.n
            for i in range(1, self.n + 1):
                new_cache[perm[i - 1] - 1] = cache[i - 1]
                new_inq[perm[i - 1] - 1] = inq[i - 1]
            new_owner = tuple(0 if o == 0 else perm[o - 1] for o in owner)
            return PiranhaState(tuple(new_cache), new_owner, tuple(new_inq))
        if kind == "loc":
            perm = check_permutation(perm, self.m)
            new_cache = []
            for row in cache:
                new_row: list = [None] * self.m
                for j in range(1, self.m + 1):
                    new_row[perm[j - 1] - 1] = row[j - 1]
                new_cache.append(tuple(new_row))
            new_owner_list: list = [0] * self.m
            for j in range(1, self.m + 1):
                new_owner_list[perm[j - 1] - 1] = owner[j - 1]
            new_inq = tuple(
                tuple(Msg(msg.kind, perm[msg.addr - 1], msg.data) for msg in queue)
                for queue in inq
            )
            return PiranhaState(tuple(new_cache), tuple(new_owner_list), new_inq)
        raise ParameterError(f"kind must be 'proc' or 'loc', got {kind!r}")


def at_most_one_exclusive(state: PiranhaState) -> bool:
    """Coherence sanity: no location is EXC in two caches at once."""
    m = len(state.owner)
    for j in range(m):
        holders = sum(1 for row in state.cache if row[j][1] == EXC)
        if holders > 1:
            return False
    return True


PROTOCOL_NAMES = ("piranha", "piranha-buggy")


def make_protocol(
    name: str, n: int, m: int, queue_bound: int = DEFAULT_QUEUE_BOUND, v: int = 2
) -> MemorySystem:
    if name == "piranha":
        return PiranhaProtocol(n, m, v, queue_bound, buggy=False)
    if name == "piranha-buggy":
        return PiranhaProtocol(n, m, v, queue_bound, buggy=True)
    raise ParameterError(f"unknown protocol {name!r} (expected one of {PROTOCOL_NAMES})")


def _check_compatible(protocol: MemorySystem, params: Params) -> None:
    if params.n != protocol.n or params.m != protocol.m or params.v > protocol.v:
        raise ParameterError(
            f"run parameters {params} incompatible with protocol "
            f"(n={protocol.n}, m={protocol.m}, v={protocol.v})"
        )


def replay(protocol: MemorySystem, run: Run, initial_state):
    """Execute the run from the given state; ReplayError names the bad event."""
    _check_compatible(protocol, run.params)
    state = initial_state
    for idx, e in enumerate(run.events, 1):
        try:
            state = protocol.step(state, e)
        except DisabledEventError as exc:
            raise ReplayError(idx, str(exc)) from None
    return state


def replay_unambiguous(protocol: MemorySystem, run: Run, initial_state) -> Trace:
    """Re-execute the run with globally fresh per-location write values.

    A shadow copy of the protocol follows the run's control path while every
    write carries the next unused value (1, 2, ... per location) and every
    read returns whatever the shadow state serves at that processor and
    location.  The result is an unambiguous trace whose renaming back to the
    original data values reproduces the run's memory projection; divergence
    between the two executions means the protocol is not data independent.
    """
    _check_compatible(protocol, run.params)
    real = initial_state
    shadow = initial_state
    next_tag: dict[int, int] = {}
    renamed: dict[tuple[int, int], int] = {}
    out: list[MemoryEvent] = []
    for idx, e in enumerate(run.events, 1):
        if isinstance(e, MemoryEvent):
            try:
                real = protocol.step(real, e)
            except DisabledEventError as exc:
                raise ReplayError(idx, str(exc)) from None
            if e.op == WRITE:
                tag = next_tag.get(e.loc, 1)
                next_tag[e.loc] = tag + 1
                sh = MemoryEvent(WRITE, e.proc, e.loc, tag)
                renamed[(e.loc, tag)] = e.data
            else:
                cands = [
                    se
                    for se in protocol.enabled(shadow)
                    if isinstance(se, MemoryEvent)
                    and se.op == READ
                    and se.proc == e.proc
                    and se.loc == e.loc
                ]
                if len(cands) != 1:
                    raise DataIndependenceError(
                        f"event {idx}: shadow state enables {len(cands)} reads at "
                        f"(proc={e.proc}, loc={e.loc}), expected exactly one"
                    )
                sh = cands[0]
                expected = 0 if sh.data == 0 else renamed.get((e.loc, sh.data))
                if expected != e.data:
                    raise DataIndependenceError(
                        f"event {idx}: shadow read value {sh.data} renames to "
                        f"{expected}, run read {e.data}"
                    )
            try:
                shadow = protocol.step(shadow, sh)
            except DisabledEventError as exc:
                raise DataIndependenceError(f"event {idx}: shadow diverged: {exc}") from None
            out.append(sh)
        else:
            try:
                real = protocol.step(real, e)
            except DisabledEventError as exc:
                raise ReplayError(idx, str(exc)) from None
            try:
                shadow = protocol.step(shadow, e)
            except DisabledEventError as exc:
                raise DataIndependenceError(f"event {idx}: shadow diverged: {exc}") from None
    v = max([1] + [tag - 1 for tag in next_tag.values()])
    return Trace(tuple(out), Params(protocol.n, protocol.m, v))


def permute_run(protocol: MemorySystem, run: Run, kind: str, perm: Sequence[int]) -> Run:
    """Apply a processor or location permutation to every event of a run.

    Internal events are mapped through the protocol's declared parameter
    kinds, so only parameters of the permuted kind change.
    """
    if kind not in ("proc", "loc"):
        raise ParameterError(f"kind must be 'proc' or 'loc', got {kind!r}")
    size = protocol.n if kind == "proc" else protocol.m
    perm = check_permutation(perm, size)
    out: list[Event] = []
    for e in run.events:
        if isinstance(e, MemoryEvent):
            if kind == "proc":
                e = MemoryEvent(e.op, perm[e.proc - 1], e.loc, e.data)
            else:
                e = MemoryEvent(e.op, e.proc, perm[e.loc - 1], e.data)
        else:
            kinds = protocol.internal_events.get(e.label)
            if kinds is None or len(kinds) != len(e.params):
                raise ParameterError(f"undeclared internal event {e!r}")
            e = InternalEvent(
                e.label,
                tuple(
                    perm[p - 1] if pk == kind else p
                    for p, pk in zip(e.params, kinds)
                ),
            )
        out.append(e)
    return Run(tuple(out), run.params)
