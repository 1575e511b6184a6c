"""Several platforms competing for users with limited bandwidth.

Each user sits on at most one platform.  The value of platform j for user i
is ``(min(gamma, m) / m) * (c - lambda_ij * b_i * d)`` where ``c`` and ``d``
count the compatible and incompatible members other than i and ``m = c + d``.
A small bandwidth makes users compare compatible fractions; a bandwidth at
least the platform size makes them compare raw utilities.  The outside option
is worth zero.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .core import INF, FromDisutility, StackedPopulation, Stack, UserPrefs, Window, compatible, rational
from .dynamics import Scripted, actors, check_starvation_free, state_cap_override
from .graph import CapExceeded, FairAnalysis, StateGraph

DEFAULT_MULTI_CAP = 5_000_000
MAX_WITNESS_LENGTH = 2_000_000


def multi_cap():
    override = state_cap_override()
    return DEFAULT_MULTI_CAP if override is None else override


def _bandwidth(value):
    if value is None or value == INF or value == "inf":
        return INF
    value = rational(value)
    if value <= 0:
        raise ValueError("bandwidth must be positive")
    return value


def base_weights(prefs: UserPrefs):
    """The user's own ``(b, lambda)``; a Direct threshold maps to ``(theta/(1-theta), 1)``."""
    t = prefs.threshold
    if isinstance(t, FromDisutility):
        return t.b, t.lam
    if t.theta >= 1:
        raise ValueError("competition needs finite disutility; threshold 1 is not allowed")
    return t.theta / (1 - t.theta), Fraction(1)


@dataclass(frozen=True)
class Platform:
    """A platform's window and personalization.

    ``lam`` is a uniform value, a per-user (or per-stack) tuple, or None to
    use each user's own lambda.
    """

    window: Window
    lam: object = None

    def __post_init__(self):
        lam = self.lam
        if isinstance(lam, (list, tuple)):
            lam = tuple(rational(x) for x in lam)
        elif lam is not None:
            lam = rational(lam)
        object.__setattr__(self, "lam", lam)

    def lam_for(self, i, own):
        if self.lam is None:
            return own
        if isinstance(self.lam, tuple):
            return self.lam[i]
        return self.lam


@dataclass(frozen=True)
class CompetitionConfig:
    users: tuple
    platforms: tuple
    initial: tuple
    bandwidths: tuple = None
    normalize: bool = True

    def __post_init__(self):
        users = tuple(self.users)
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "platforms", tuple(self.platforms))
        object.__setattr__(self, "initial", tuple(self.initial))
        bw = self.bandwidths
        bw = (INF,) * len(users) if bw is None else tuple(_bandwidth(x) for x in bw)
        object.__setattr__(self, "bandwidths", bw)

    @property
    def n(self):
        return len(self.users)

    @property
    def k(self):
        return len(self.platforms)


@dataclass(frozen=True)
class CompetitorStack:
    prefs: UserPrefs
    count: int
    bandwidth: object = INF
    initial: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "bandwidth", _bandwidth(self.bandwidth))
        object.__setattr__(self, "initial", tuple(self.initial))


@dataclass(frozen=True)
class StackedCompetition:
    """Competition over stacks of identical users.

    ``initial`` of a stack gives the number of its members initially on
    each platform; the rest start on no platform.
    """

    stacks: tuple
    platforms: tuple
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "stacks", tuple(self.stacks))
        object.__setattr__(self, "platforms", tuple(self.platforms))

    @property
    def n(self):
        return sum(s.count for s in self.stacks)

    @property
    def k(self):
        return len(self.platforms)

    def initial_counts(self, s):
        init = self.stacks[s].initial
        return tuple(init) + (0,) * (self.k - len(init))

    def expand(self) -> CompetitionConfig:
        users, bands, initial, owner = [], [], [], []
        for s, st in enumerate(self.stacks):
            counts = self.initial_counts(s)
            locs = []
            for j, c in enumerate(counts):
                locs.extend([j] * c)
            locs.extend([None] * (st.count - len(locs)))
            users.extend([st.prefs] * st.count)
            bands.extend([st.bandwidth] * st.count)
            initial.extend(locs)
            owner.extend([s] * st.count)
        platforms = []
        for p in self.platforms:
            lam = p.lam
            if isinstance(lam, tuple):
                lam = tuple(lam[s] for s in owner)
            platforms.append(Platform(p.window, lam))
        return CompetitionConfig(tuple(users), tuple(platforms), tuple(initial), tuple(bands), self.normalize)

    def population(self, platform=0) -> StackedPopulation:
        """Single-platform view: stacks with their members on ``platform`` as adopters."""
        return StackedPopulation(
            [Stack(s.prefs, s.count, self.initial_counts(k)[platform]) for k, s in enumerate(self.stacks)]
        )


def validate_competition(cfg) -> list[str]:
    problems = []
    if isinstance(cfg, StackedCompetition):
        for s, st in enumerate(cfg.stacks):
            counts = cfg.initial_counts(s)
            if len(st.initial) > cfg.k or sum(counts) > st.count or min(counts, default=0) < 0:
                problems.append(f"stack {s}: initial counts invalid")
            for j, c in enumerate(counts):
                if c and st.prefs.speech not in cfg.platforms[j].window:
                    problems.append(f"stack {s}: initially on platform {j} but not eligible")
        return problems
    if len(cfg.initial) != cfg.n:
        problems.append("initial assignment length differs from the number of users")
    for i, loc in enumerate(cfg.initial):
        if loc is None:
            continue
        if not 0 <= loc < cfg.k:
            problems.append(f"user {i}: platform index out of range")
        elif cfg.users[i].speech not in cfg.platforms[loc].window:
            problems.append(f"user {i}: initially on platform {loc} but not eligible")
    for p, plat in enumerate(cfg.platforms):
        lams = plat.lam if isinstance(plat.lam, tuple) else (plat.lam,)
        if any(x is not None and not 0 <= x <= 1 for x in lams):
            problems.append(f"platform {p}: lambda outside [0,1]")
    return problems


# ---------------------------------------------------------------------------
# Values and the switching rule
# ---------------------------------------------------------------------------


def _value(c, d, gamma, weight, normalize):
    m = c + d
    if m == 0:
        return Fraction(0)
    share = min(gamma, m)
    if normalize:
        share = Fraction(share) / m if gamma != INF else Fraction(1)
    elif gamma == INF:
        share = m
    return share * (c - weight * d)


def platform_value(i, j, state, cfg) -> Fraction:
    u = cfg.users[i]
    plat = cfg.platforms[j]
    if u.speech not in plat.window:
        raise ValueError(f"user {i} is not eligible for platform {j}")
    c = d = 0
    for k, loc in enumerate(state):
        if loc == j and k != i:
            if compatible(u, cfg.users[k].speech):
                c += 1
            else:
                d += 1
    b, own = base_weights(u)
    return _value(c, d, cfg.bandwidths[i], plat.lam_for(i, own) * b, cfg.normalize)


def _choose(values, current):
    """Pick from ``{platform: value}``: best value, platform over None, stay, lowest index."""
    best, best_key = None, (Fraction(0), 0, 1 if current is None else 0, 0)
    for j, v in values.items():
        key = (v, 1, 1 if current == j else 0, -j)
        if key > best_key:
            best, best_key = j, key
    return best


def multi_step(state, i, cfg) -> tuple:
    state = tuple(state)
    u = cfg.users[i]
    values = {
        j: platform_value(i, j, state, cfg)
        for j, plat in enumerate(cfg.platforms)
        if u.speech in plat.window
    }
    return state[:i] + (_choose(values, state[i]),) + state[i + 1:]


def multi_is_stable(state, cfg) -> bool:
    state = tuple(state)
    return all(multi_step(state, i, cfg) == state for i in range(cfg.n))


@dataclass
class MultiTrace:
    initial: tuple
    steps: list = field(default_factory=list)

    @property
    def states(self):
        return [self.initial] + [s for _, _, s in self.steps]

    def sizes(self, j):
        return [sum(1 for loc in s if loc == j) for s in self.states]

    def to_json(self):
        return {
            "initial": list(self.initial),
            "steps": [{"t": t, "actor": a, "assignment": list(s)} for t, a, s in self.steps],
        }


def multi_simulate(cfg, schedule, horizon) -> MultiTrace:
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    check_starvation_free(schedule, cfg.n)
    state = tuple(cfg.initial)
    trace = MultiTrace(state)
    if cfg.n == 0:
        return trace
    it = actors(schedule, cfg.n)
    for t in range(1, horizon + 1):
        i = next(it)
        state = multi_step(state, i, cfg)
        trace.steps.append((t, i, state))
    return trace


def multi_potential(state, cfg) -> Fraction:
    """Sum over platforms of members' raw utilities; needs homogeneous weights."""
    weights = set()
    for i, u in enumerate(cfg.users):
        b, own = base_weights(u)
        for j, p in enumerate(cfg.platforms):
            weights.add(p.lam_for(i, own) * b)
    if len(weights) > 1:
        raise ValueError("potential requires homogeneous lambda * b")
    total = Fraction(0)
    for i, loc in enumerate(state):
        if loc is None:
            continue
        c = d = 0
        for k, other in enumerate(state):
            if other == loc and k != i:
                if compatible(cfg.users[i], cfg.users[k].speech):
                    c += 1
                else:
                    d += 1
        total += c - next(iter(weights)) * d
    return total


# ---------------------------------------------------------------------------
# Fair-limit engines
# ---------------------------------------------------------------------------


@dataclass
class MultiFairLimitReport:
    focus: int
    min_size: int
    per_platform_min_sizes: list
    equilibria: list
    witness: Scripted
    num_fair_closed_sccs: int

    def to_json(self):
        return {
            "focus": self.focus,
            "min_size": self.min_size,
            "per_platform_min_sizes": self.per_platform_min_sizes,
            "num_fair_closed_sccs": self.num_fair_closed_sccs,
            "equilibria": [list(e) for e in self.equilibria],
            "witness": self.witness.to_json(),
        }


def _report(analysis, focus, k, sizes_of, decode, witness_fn):
    size, comp, node = analysis.minimize(lambda st: sizes_of(st)[focus])
    states = [analysis.graph.states[v] for v in comp]
    per = [min(sizes_of(st)[j] for st in states) for j in range(k)]
    prefix, tour = analysis.witness(comp, node)
    return MultiFairLimitReport(
        focus=focus,
        min_size=size,
        per_platform_min_sizes=per,
        equilibria=[decode(s) for s in analysis.equilibria()],
        witness=witness_fn(prefix, tour),
        num_fair_closed_sccs=len(analysis.components),
    )


def multi_fair_limit(cfg, focus=0, cap=None) -> MultiFairLimitReport:
    """Worst case over fair schedules of the limiting size of platform ``focus``.

    Stacked configurations are analysed over per-stack location counts.
    """
    if isinstance(cfg, StackedCompetition):
        return _stacked_fair_limit(cfg, focus, cap)
    cap = multi_cap() if cap is None else cap
    if (cfg.k + 1) ** cfg.n > cap:
        raise CapExceeded("state space too large; use quotient engine")
    k = cfg.k

    def successors(state):
        return [(i, multi_step(state, i, cfg)) for i in range(cfg.n)]

    def sizes_of(state):
        out = [0] * k
        for loc in state:
            if loc is not None:
                out[loc] += 1
        return out

    analysis = FairAnalysis(StateGraph(tuple(cfg.initial), successors))
    return _report(analysis, focus, k, sizes_of, lambda s: s, Scripted)


class MultiQuotientEngine:
    """States are tuples of per-stack location counts (one entry per platform)."""

    def __init__(self, cfg: StackedCompetition, cap=None):
        self.cfg = cfg
        k = self.k = cfg.k
        stacks = cfg.stacks
        self.compat = [[1 if compatible(a.prefs, b.prefs.speech) else 0 for b in stacks] for a in stacks]
        self.elig = [[s.prefs.speech in p.window for p in cfg.platforms] for s in stacks]
        self.weight = []
        for si, s in enumerate(stacks):
            b, own = base_weights(s.prefs)
            self.weight.append([p.lam_for(si, own) * b for p in cfg.platforms])
        cap = multi_cap() if cap is None else cap
        space = 1
        for s, el in zip(stacks, self.elig):
            options = sum(el)
            space *= math.comb(s.count + options, options)
        if space > cap:
            raise CapExceeded("state space too large for the configured cap")

    def initial(self):
        return tuple(self.cfg.initial_counts(s) for s in range(len(self.cfg.stacks)))

    def sizes(self, state):
        return [sum(st[j] for st in state) for j in range(self.k)]

    def successors(self, state):
        cfg, k = self.cfg, self.k
        n_stacks = len(cfg.stacks)
        out = []
        for s in range(n_stacks):
            stack = cfg.stacks[s]
            here = state[s]
            none_count = stack.count - sum(here)
            row = self.compat[s]
            for loc in list(range(k)) + [None]:
                present = none_count if loc is None else here[loc]
                if present == 0:
                    continue
                values = {}
                for j in range(k):
                    if not self.elig[s][j]:
                        continue
                    c = d = 0
                    for t in range(n_stacks):
                        cnt = state[t][j] - (1 if (t == s and loc == j) else 0)
                        if row[t]:
                            c += cnt
                        else:
                            d += cnt
                    values[j] = _value(c, d, stack.bandwidth, self.weight[s][j], cfg.normalize)
                dest = _choose(values, loc)
                nxt = state
                if dest != loc:
                    moved = list(here)
                    if loc is not None:
                        moved[loc] -= 1
                    if dest is not None:
                        moved[dest] += 1
                    nxt = state[:s] + (tuple(moved),) + state[s + 1:]
                out.append(((s, k if loc is None else loc), nxt))
        return out

    def apply(self, state, label):
        for lab, nxt in self.successors(state):
            if lab == label:
                return nxt
        raise ValueError(f"label {label} not available")

    def is_stable(self, state):
        return all(nxt == state for _, nxt in self.successors(state))

    def expand_state(self, state):
        out = []
        for s, counts in enumerate(state):
            locs = []
            for j, c in enumerate(counts):
                locs.extend([j] * c)
            locs.extend([None] * (self.cfg.stacks[s].count - len(locs)))
            out.extend(locs)
        return tuple(out)

    def flat_witness(self, prefix, tour):
        """Expand quotient labels to flat ids with first-in first-out rotation."""
        k = self.k
        state = self.initial()
        queues = []
        offset = 0
        for s, st in enumerate(self.cfg.stacks):
            per = []
            pos = offset
            for j in range(k):
                per.append(deque(range(pos, pos + state[s][j])))
                pos += state[s][j]
            per.append(deque(range(pos, offset + st.count)))
            queues.append(per)
            offset += st.count

        def play(labels, every_member):
            nonlocal state
            out = []
            for s, loc in labels:
                nxt = self.apply(state, (s, loc))
                queue = queues[s][loc]
                if nxt == state:
                    out.extend(queue if every_member else [queue[0]])
                else:
                    before, after = state[s], nxt[s]
                    dest = next(
                        (j for j in range(k) if after[j] > before[j]),
                        k,
                    )
                    x = queue.popleft()
                    queues[s][dest].append(x)
                    out.append(x)
                state = nxt
            return out

        def snapshot():
            return [tuple(q) for per in queues for q in per]

        flat_prefix = play(prefix, False)
        start = snapshot()
        cycle = []
        while True:
            cycle.extend(play(tour, True))
            if snapshot() == start:
                break
            if len(cycle) > MAX_WITNESS_LENGTH:
                raise CapExceeded("witness schedule too long")
        return Scripted(flat_prefix, cycle)


def _stacked_fair_limit(cfg, focus, cap):
    engine = MultiQuotientEngine(cfg, cap)
    analysis = FairAnalysis(StateGraph(engine.initial(), engine.successors))
    return _report(analysis, focus, cfg.k, engine.sizes, engine.expand_state, engine.flat_witness)
