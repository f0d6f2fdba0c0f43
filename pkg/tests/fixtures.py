"""Miniature memory systems used to exercise the assumption validator."""
from scmc.errors import DisabledEventError, ParameterError
from scmc.events import READ, WRITE, MemoryEvent
from scmc.protocol import MemorySystem


class PrivilegedWriterProtocol(MemorySystem):
    """Flat shared memory where only processor 1 may write.

    Deliberately breaks processor symmetry (a run containing a write cannot
    be replayed after a processor permutation moves it off processor 1)
    while keeping causality intact.  State is the memory word per location.
    """

    internal_events: dict = {}

    def __init__(self, n: int = 2, m: int = 2, v: int = 2):
        if min(n, m, v) < 1:
            raise ParameterError("n, m, v must all be >= 1")
        self.n, self.m, self.v = n, m, v

    def initial_states(self):
        return ((0,) * self.m,)

    def successors(self, state):
        out = []
        for i in range(1, self.n + 1):
            for j in range(1, self.m + 1):
                out.append((MemoryEvent(READ, i, j, state[j - 1]), state))
        for j in range(1, self.m + 1):
            for d in range(self.v + 1):
                out.append(
                    (MemoryEvent(WRITE, 1, j, d), state[: j - 1] + (d,) + state[j:])
                )
        return tuple(out)

    def enabled(self, state):
        return tuple(e for e, _ in self.successors(state))

    def step(self, state, event):
        for e, nxt in self.successors(state):
            if e == event:
                return nxt
        raise DisabledEventError(f"{event} is not enabled")

    def permute_state(self, state, kind, perm):
        if kind == "proc":
            return state
        if kind == "loc":
            out = [0] * self.m
            for j in range(1, self.m + 1):
                out[perm[j - 1] - 1] = state[j - 1]
            return tuple(out)
        raise ParameterError(f"unknown permutation kind {kind!r}")


class HallucinatingReadProtocol(MemorySystem):
    """Stateless system whose reads may return 1 although nothing writes.

    Deliberately breaks causality; fully symmetric in both processors and
    locations.
    """

    internal_events: dict = {}

    def __init__(self, n: int = 1, m: int = 1, v: int = 2):
        if min(n, m, v) < 1:
            raise ParameterError("n, m, v must all be >= 1")
        self.n, self.m, self.v = n, m, v

    def initial_states(self):
        return ((),)

    def successors(self, state):
        out = []
        for i in range(1, self.n + 1):
            for j in range(1, self.m + 1):
                for d in (0, 1):
                    out.append((MemoryEvent(READ, i, j, d), state))
        return tuple(out)

    def enabled(self, state):
        return tuple(e for e, _ in self.successors(state))

    def step(self, state, event):
        for e, nxt in self.successors(state):
            if e == event:
                return nxt
        raise DisabledEventError(f"{event} is not enabled")

    def permute_state(self, state, kind, perm):
        return state
