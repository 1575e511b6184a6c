"""Switching dynamics: policies, schedules, simulation and fair-limit analysis.

Users act one at a time.  The scheduled user joins (or stays) when willing
and leaves (or stays off) otherwise; users whose speech falls outside the
current window are removed.  ``fair_limit_min`` computes the worst case over
starvation-free schedules of the limiting minimum platform size exactly, by
analysing the finite transition graph.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    FULL_WINDOW,
    FromDisutility,
    Population,
    Window,
    compatible,
    format_rational,
    utility,
    willing,
)
from .graph import CapExceeded, FairAnalysis, StateGraph

DEFAULT_FLAT_CAP = 15


def state_cap_override():
    """The state-count cap from ``MODWIN_STATE_CAP``, if set."""
    raw = os.environ.get("MODWIN_STATE_CAP")
    return int(raw) if raw else None


def flat_user_cap():
    override = state_cap_override()
    if override is None:
        return DEFAULT_FLAT_CAP
    return max(override.bit_length() - 1, 0)


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoModeration:
    @property
    def phases(self):
        return ((FULL_WINDOW, NEVER),)


@dataclass(frozen=True)
class Static:
    window: Window

    @property
    def phases(self):
        return ((self.window, NEVER),)


@dataclass(frozen=True)
class Advance:
    """When a phase ends: ``"superset"`` of ``target``, ``"always"`` or ``"never"``."""

    kind: str
    target: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in ("superset", "always", "never"):
            raise ValueError(f"unknown advance condition {self.kind!r}")
        object.__setattr__(self, "target", frozenset(self.target))

    def holds(self, state) -> bool:
        if self.kind == "always":
            return True
        if self.kind == "never":
            return False
        return self.target <= state


NEVER = Advance("never")


@dataclass(frozen=True)
class Phased:
    phases: tuple

    def __post_init__(self):
        phases = tuple((w, c) for w, c in self.phases)
        if not phases:
            raise ValueError("a phased policy needs at least one phase")
        if phases[-1][1].kind != "never":
            raise ValueError("the last phase must never advance")
        object.__setattr__(self, "phases", phases)


def as_policy(policy):
    if policy is None:
        return NoModeration()
    if isinstance(policy, Window):
        return Static(policy)
    return policy


def eligible(pop, window) -> frozenset:
    if window is None:
        window = FULL_WINDOW
    return frozenset(i for i, u in enumerate(pop.users) if u.speech in window)


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundRobin:
    order: tuple

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))


@dataclass(frozen=True)
class Cyclic:
    sequence: tuple

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))


@dataclass(frozen=True)
class Scripted:
    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))

    def to_json(self):
        return {"prefix": list(self.prefix), "cycle": list(self.cycle)}


@dataclass(frozen=True)
class SeededRandom:
    """A fresh uniformly shuffled round of all users, repeated forever."""

    seed: int


def check_starvation_free(schedule, n):
    if isinstance(schedule, RoundRobin):
        if sorted(schedule.order) != list(range(n)):
            raise ValueError("round-robin order must be a permutation of the user ids")
    elif isinstance(schedule, (Cyclic, Scripted)):
        cycle = schedule.sequence if isinstance(schedule, Cyclic) else schedule.cycle
        missing = set(range(n)) - set(cycle)
        if missing:
            raise ValueError(f"schedule starves users {sorted(missing)}")
        bad = [a for a in cycle if not 0 <= a < n]
        if isinstance(schedule, Scripted):
            bad += [a for a in schedule.prefix if not 0 <= a < n]
        if bad:
            raise ValueError(f"schedule mentions unknown users {sorted(set(bad))}")


def schedule_prefix_cycle(schedule):
    """Split a periodic schedule into a prefix and a repeated cycle."""
    if isinstance(schedule, RoundRobin):
        return (), schedule.order
    if isinstance(schedule, Cyclic):
        return (), schedule.sequence
    if isinstance(schedule, Scripted):
        return schedule.prefix, schedule.cycle
    raise TypeError("schedule is not periodic")


def actors(schedule, n):
    """Yield the scheduled user for t = 1, 2, ..."""
    if n == 0:
        return
    if isinstance(schedule, SeededRandom):
        rng = random.Random(schedule.seed)
        order = list(range(n))
        while True:
            rng.shuffle(order)
            yield from order
    prefix, cycle = schedule_prefix_cycle(schedule)
    yield from prefix
    while True:
        yield from cycle


# ---------------------------------------------------------------------------
# Transition rule and simulation
# ---------------------------------------------------------------------------


def step(state, i, window, pop) -> frozenset:
    state = frozenset(state)
    if window is not None and pop.users[i].speech not in window:
        return state - {i}
    if i in state:
        return state if willing(i, state, pop) else state - {i}
    return state | {i} if willing(i, state, pop) else state


def initial_state(pop, policy) -> frozenset:
    window = as_policy(policy).phases[0][0]
    return frozenset(pop.initial_adopters) & eligible(pop, window)


@dataclass(frozen=True)
class TraceStep:
    t: int
    phase: int
    actor: int
    action: str
    state: frozenset
    forced: frozenset = frozenset()


@dataclass
class Trace:
    initial: frozenset
    steps: list = field(default_factory=list)

    @property
    def states(self):
        return [self.initial] + [s.state for s in self.steps]

    @property
    def sizes(self):
        return [len(s) for s in self.states]

    def rows(self):
        return [
            {"t": s.t, "phase": s.phase, "actor": s.actor, "action": s.action, "size": len(s.state)}
            for s in self.steps
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, ["t", "phase", "actor", "action", "size"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "initial": sorted(self.initial),
            "steps": [
                dict(row, state=sorted(s.state), forced=sorted(s.forced))
                for row, s in zip(self.rows(), self.steps)
            ],
        }


def _apply(pop, phases, phase, state, i):
    """One time step; returns (phase, forced removals, action, new state)."""
    if phase + 1 < len(phases) and phases[phase][1].holds(state):
        phase += 1
    window = phases[phase][0]
    kept = frozenset(j for j in state if pop.users[j].speech in window)
    forced = state - kept
    if pop.users[i].speech not in window:
        return phase, forced, "banned", kept
    new = step(kept, i, window, pop)
    if new == kept:
        action = "stay"
    else:
        action = "join" if i in new else "leave"
    return phase, forced, action, new


def simulate(pop, policy, schedule, horizon) -> Trace:
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    check_starvation_free(schedule, pop.n)
    phases = as_policy(policy).phases
    state = initial_state(pop, policy)
    trace = Trace(state)
    phase = 0
    if pop.n == 0:
        return trace
    it = actors(schedule, pop.n)
    for t in range(1, horizon + 1):
        i = next(it)
        phase, forced, action, state = _apply(pop, phases, phase, state, i)
        trace.steps.append(TraceStep(t, phase, i, action, state, forced))
    return trace


def exact_liminf(pop, policy, schedule, objective=len):
    """The exact limit inferior of ``objective`` under a periodic schedule.

    The pair (phase, state) at cycle boundaries is eventually periodic, so
    the run is simulated until a boundary repeats.
    """
    check_starvation_free(schedule, pop.n)
    phases = as_policy(policy).phases
    state = initial_state(pop, policy)
    if pop.n == 0:
        return objective(state)
    prefix, cycle = schedule_prefix_cycle(schedule)
    phase = 0
    for i in prefix:
        phase, _, _, state = _apply(pop, phases, phase, state, i)
    seen = {}
    cycle_mins = []
    while (phase, state) not in seen:
        seen[(phase, state)] = len(cycle_mins)
        low = None
        for i in cycle:
            phase, _, _, state = _apply(pop, phases, phase, state, i)
            val = objective(state)
            if low is None or val < low:
                low = val
        cycle_mins.append(low)
    return min(cycle_mins[seen[(phase, state)]:])


def is_stable(state, pop, window=None) -> bool:
    state = frozenset(state)
    elig = eligible(pop, window)
    if not state <= elig:
        return False
    if any(not willing(i, state, pop) for i in state):
        return False
    return not any(willing(j, state, pop) for j in elig - state)


def potential(state, pop) -> Fraction:
    """Sum of on-platform utilities; needs homogeneous ``b`` and ``lambda``."""
    specs = {u.threshold for u in pop.users}
    if any(not isinstance(s, FromDisutility) for s in specs) or len({(s.b, s.lam) for s in specs}) > 1:
        raise ValueError("potential requires homogeneous FromDisutility thresholds")
    return sum((utility(i, state, pop) for i in state), Fraction(0))


# ---------------------------------------------------------------------------
# Exact fair-limit engine over subsets of users
# ---------------------------------------------------------------------------


@dataclass
class FairLimitReport:
    min_size: int
    witness: Scripted
    num_fair_closed_sccs: int
    equilibria: list

    def to_json(self) -> dict:
        return {
            "min_size": self.min_size,
            "num_fair_closed_sccs": self.num_fair_closed_sccs,
            "equilibria": [sorted(e) for e in self.equilibria],
            "witness": self.witness.to_json(),
        }


class FlatEngine:
    """Bitmask transition system for a population under a policy.

    States are integers: bits ``0..n-1`` hold the on-platform set and the
    bits above hold the phase index.
    """

    def __init__(self, pop: Population, policy, cap=None):
        self.pop = pop
        self.policy = as_policy(policy)
        n = self.n = pop.n
        phases = self.policy.phases
        self.elig = [sum(1 << i for i in eligible(pop, w)) for w, _ in phases]
        self.conds = [c for _, c in phases]
        self.targets = [sum(1 << i for i in c.target) for c in self.conds]
        union = 0
        for m in self.elig:
            union |= m
        cap = flat_user_cap() if cap is None else cap
        if union.bit_count() > cap:
            raise CapExceeded("state space too large; use quotient engine")
        self.compat = []
        self.theta = []
        for i, u in enumerate(pop.users):
            mask = 0
            for j, v in enumerate(pop.users):
                if j != i and compatible(u, v.speech):
                    mask |= 1 << j
            self.compat.append(mask)
            th = u.theta
            self.theta.append((th.numerator, th.denominator))
        self.full = (1 << n) - 1

    def initial(self):
        adopters = sum(1 << i for i in self.pop.initial_adopters)
        return adopters & self.elig[0]

    def _advance(self, phase, mask):
        if phase + 1 < len(self.conds):
            kind = self.conds[phase].kind
            if kind == "always" or (kind == "superset" and self.targets[phase] & ~mask == 0):
                return phase + 1
        return phase

    def move(self, mask, i, elig):
        bit = 1 << i
        others = mask & ~bit
        if not elig & bit:
            return others
        total = others.bit_count()
        if total == 0:
            return mask | bit
        num, den = self.theta[i]
        ok = (others & self.compat[i]).bit_count() * den >= num * total
        return others | bit if ok else others

    def successors(self, state):
        n = self.n
        phase = state >> n
        mask = state & self.full
        phase = self._advance(phase, mask)
        elig = self.elig[phase]
        mask &= elig
        high = phase << n
        return [(i, self.move(mask, i, elig) | high) for i in range(n)]

    def decode(self, state) -> frozenset:
        mask = state & self.full
        return frozenset(i for i in range(self.n) if mask >> i & 1)

    def analyze(self) -> FairAnalysis:
        return FairAnalysis(StateGraph(self.initial(), self.successors))


def analyze(pop, policy, cap=None):
    """Return the engine and the fair-closed analysis of its reachable graph."""
    engine = FlatEngine(pop, policy, cap)
    return engine, engine.analyze()


def fair_limit_min(pop, policy=None, cap=None) -> FairLimitReport:
    engine, analysis = analyze(pop, policy, cap)
    size, comp, node = analysis.minimize(lambda s: (s & engine.full).bit_count())
    prefix, cycle = analysis.witness(comp, node)
    return FairLimitReport(
        min_size=size,
        witness=Scripted(prefix, cycle),
        num_fair_closed_sccs=len(analysis.components),
        equilibria=[engine.decode(s) for s in analysis.equilibria()],
    )


def report_json(report) -> str:
    return json.dumps(report.to_json(), sort_keys=True)


def window_json(window):
    if window is None:
        return None
    if window.is_empty:
        return "empty"
    return [format_rational(window.lo), format_rational(window.hi)]
