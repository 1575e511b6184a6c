"""Fair-limit analysis over per-stack on-platform counts.

Users inside a stack are interchangeable, so a state only needs how many
members of each stack are on the platform.  Transitions are labelled
``(stack, side)`` where side 1 means an on-platform member acts and side 0
an off-platform member acts.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

from .core import StackedPopulation, compatible
from .dynamics import FairLimitReport, NoModeration, Scripted, Static, as_policy, state_cap_override
from .graph import CapExceeded, FairAnalysis, StateGraph

DEFAULT_QUOTIENT_CAP = 5_000_000
MAX_WITNESS_LENGTH = 2_000_000


def quotient_cap():
    override = state_cap_override()
    return DEFAULT_QUOTIENT_CAP if override is None else override


def static_window(policy):
    policy = as_policy(policy)
    if isinstance(policy, NoModeration):
        return None
    if isinstance(policy, Static):
        return policy.window
    raise TypeError("the quotient engine supports static windows only")


class QuotientEngine:
    def __init__(self, stacked: StackedPopulation, window=None, cap=None):
        window = static_window(window)
        self.stacked = stacked
        stacks = stacked.stacks
        self.k = len(stacks)
        self.size = [s.count for s in stacks]
        self.elig = [window is None or s.prefs.speech in window for s in stacks]
        self.compat = [[1 if compatible(a.prefs, b.prefs.speech) else 0 for b in stacks] for a in stacks]
        self.theta = []
        for s in stacks:
            th = s.prefs.theta
            self.theta.append((th.numerator, th.denominator))
        cap = quotient_cap() if cap is None else cap
        space = math.prod(c + 1 for c, e in zip(self.size, self.elig) if e)
        if space > cap:
            raise CapExceeded("state space too large for the configured cap")

    def initial(self):
        return tuple(s.initial_on if e else 0 for s, e in zip(self.stacked.stacks, self.elig))

    def successors(self, state):
        total = sum(state)
        out = []
        for s in range(self.k):
            c = state[s]
            if not self.elig[s]:
                out.append(((s, 0), state))
                continue
            row = self.compat[s]
            good = sum(row[t] * state[t] for t in range(self.k))
            num, den = self.theta[s]
            if c > 0:
                others = total - 1
                ok = others == 0 or (good - 1) * den >= num * others
                out.append(((s, 1), state if ok else state[:s] + (c - 1,) + state[s + 1:]))
            if c < self.size[s]:
                ok = total == 0 or good * den >= num * total
                out.append(((s, 0), state[:s] + (c + 1,) + state[s + 1:] if ok else state))
        return out

    def apply(self, state, label):
        for lab, nxt in self.successors(state):
            if lab == label:
                return nxt
        raise ValueError(f"label {label} not available in state {state}")

    def is_stable(self, state) -> bool:
        return all(nxt == state for _, nxt in self.successors(state))

    def all_states(self):
        ranges = [range(c + 1) if e else range(1) for c, e in zip(self.size, self.elig)]
        return itertools.product(*ranges)

    def expand_state(self, state) -> frozenset:
        offsets = self.stacked.offsets()
        return frozenset(o + j for o, c in zip(offsets, state) for j in range(c))

    def analyze(self) -> FairAnalysis:
        return FairAnalysis(StateGraph(self.initial(), self.successors))

    def flat_witness(self, prefix, tour):
        """Translate quotient label sequences into a flat Scripted schedule.

        Members of a stack are cycled first-in first-out, and a self-loop
        label is issued once for every member on that side, so every user
        acts within the repeated cycle.  The tour is repeated until the
        per-stack queues return to their starting arrangement, which makes
        the flat cycle exactly periodic.
        """
        offsets = self.stacked.offsets()
        state = self.initial()
        on_q, off_q = [], []
        for s in range(self.k):
            ids = list(range(offsets[s], offsets[s] + self.size[s]))
            on_q.append(deque(ids[: state[s]]))
            off_q.append(deque(ids[state[s]:]))

        def play(labels, every_member):
            nonlocal state
            out = []
            for s, side in labels:
                nxt = self.apply(state, (s, side))
                queue = on_q[s] if side else off_q[s]
                if nxt == state:
                    out.extend(queue if every_member else [queue[0]])
                else:
                    x = queue.popleft()
                    (off_q[s] if side else on_q[s]).append(x)
                    out.append(x)
                state = nxt
            return out

        flat_prefix = play(prefix, False)
        start = [tuple(q) for q in on_q + off_q]
        flat_cycle = []
        while True:
            flat_cycle.extend(play(tour, True))
            if [tuple(q) for q in on_q + off_q] == start:
                break
            if len(flat_cycle) > MAX_WITNESS_LENGTH:
                raise CapExceeded("witness schedule too long")
        return Scripted(flat_prefix, flat_cycle)


def fair_limit_min_quotient(stacked, window=None, cap=None) -> FairLimitReport:
    engine = QuotientEngine(stacked, window, cap)
    analysis = engine.analyze()
    size, comp, node = analysis.minimize(sum)
    prefix, tour = analysis.witness(comp, node)
    return FairLimitReport(
        min_size=size,
        witness=engine.flat_witness(prefix, tour),
        num_fair_closed_sccs=len(analysis.components),
        equilibria=[engine.expand_state(s) for s in analysis.equilibria()],
    )


def stable_count_vectors(stacked, window=None):
    """Every stable per-stack count vector, found by exhaustive enumeration."""
    engine = QuotientEngine(stacked, window)
    return [s for s in engine.all_states() if engine.is_stable(s)]
