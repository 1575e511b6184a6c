"""Largest compatible communities and guaranteed-window constructions."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .core import Direct, Population, Window, compatible, willing
from .dynamics import Advance, Phased
from .graph import CapExceeded

DEFAULT_LCC_CAP = 20


@dataclass(frozen=True)
class LccResult:
    members: frozenset
    size: int
    method: str

    def to_json(self):
        return {"method": self.method, "size": self.size, "members": sorted(self.members)}


def is_compatible_community(members, pop) -> bool:
    members = frozenset(members)
    return all(willing(i, members, pop) for i in members)


def _result(members, pop, method):
    members = frozenset(members)
    assert is_compatible_community(members, pop), "not a compatible community"
    return LccResult(members, len(members), method)


def _better(candidate, best):
    """Prefer larger sets, then the lexicographically smallest sorted ids."""
    if best is None:
        return True
    if len(candidate) != len(best):
        return len(candidate) > len(best)
    return sorted(candidate) < sorted(best)


def lcc_exact(pop: Population, cap=DEFAULT_LCC_CAP) -> LccResult:
    """Exhaustive search for a largest compatible community.

    Sizes are tried from n downward.  For a target size k a user needs at
    least ceil(theta * (k - 1)) compatible candidates, which prunes the
    candidate pool to a fixed point before enumerating combinations in
    lexicographic order.
    """
    n = pop.n
    if n > cap:
        raise CapExceeded(f"exact LCC is limited to {cap} users")
    if n == 0:
        return LccResult(frozenset(), 0, "brute_force")
    compat = []
    for u in pop.users:
        compat.append(sum(1 << j for j, v in enumerate(pop.users) if compatible(u, v.speech)))
    theta = [u.theta for u in pop.users]

    def feasible(mask, members):
        others = len(members) - 1
        if others == 0:
            return True
        for i in members:
            good = (mask & compat[i] & ~(1 << i)).bit_count()
            if good < theta[i] * others:
                return False
        return True

    for k in range(n, 0, -1):
        pool = set(range(n))
        changed = True
        while changed:
            changed = False
            pmask = sum(1 << j for j in pool)
            for i in list(pool):
                good = (pmask & compat[i] & ~(1 << i)).bit_count()
                if good < math.ceil(theta[i] * (k - 1)):
                    pool.discard(i)
                    changed = True
        if len(pool) < k:
            continue
        for combo in itertools.combinations(sorted(pool), k):
            mask = sum(1 << j for j in combo)
            if feasible(mask, combo):
                return _result(combo, pop, "brute_force")
    raise AssertionError("a single user is always a compatible community")


def lcc_theta_one(pop: Population) -> LccResult:
    """Largest community when every user tolerates only compatible speech.

    Users are sorted by speech point; for every mutually compatible pair
    the users between them that are mutually compatible with both ends
    form a candidate, and the largest candidate wins.
    """
    if any(not (isinstance(u.threshold, Direct) and u.threshold.theta == 1) for u in pop.users):
        raise ValueError("lcc_theta_one requires every threshold to be Direct(1)")
    if pop.n == 0:
        return LccResult(frozenset(), 0, "theta_one")
    users = pop.users
    order = sorted(range(pop.n), key=lambda i: (users[i].speech, i))

    def mutual(a, b):
        return compatible(users[a], users[b].speech) and compatible(users[b], users[a].speech)

    best = {order[0]}
    for x in range(len(order)):
        for y in range(x + 1, len(order)):
            i, j = order[x], order[y]
            if not mutual(i, j):
                continue
            group = {i, j}
            for z in range(x + 1, y):
                k = order[z]
                if mutual(i, k) and mutual(k, j):
                    group.add(k)
            if _better(group, best):
                best = group
    return _result(best, pop, "theta_one")


def mutually_compatible_core(pop: Population) -> LccResult:
    """The largest set of pairwise mutually compatible users.

    Such a set is exactly the users whose speech lies in ``[P, Q]`` and
    whose intervals cover ``[P, Q]``, where P and Q are the extreme speech
    points of the set.  Users are grouped by identical preferences so that
    populations with many copies stay cheap; the end-pair enumeration is
    the same as for ``lcc_theta_one``.
    """
    if pop.n == 0:
        return LccResult(frozenset(), 0, "core")
    groups = {}
    for i, u in enumerate(pop.users):
        groups.setdefault((u.left, u.speech, u.right), []).append(i)
    kinds = sorted(groups, key=lambda t: (t[1], t[0], t[2]))

    def mutual(a, b):
        return a[0] <= b[1] <= a[2] and b[0] <= a[1] <= b[2]

    best = None
    for x, a in enumerate(kinds):
        for b in kinds[x:]:
            if not mutual(a, b):
                continue
            lo, hi = a[1], b[1]
            members = []
            for c in kinds:
                if lo <= c[1] <= hi and c[0] <= lo and c[2] >= hi:
                    members.extend(groups[c])
            if _better(members, best):
                best = members
    return _result(best, pop, "core")


def core_window(pop: Population) -> Window:
    if pop.n == 0:
        raise ValueError("core window of an empty population")
    core = mutually_compatible_core(pop).members
    speeches = [pop.users[i].speech for i in core]
    return Window(min(speeches), max(speeches))


# ---------------------------------------------------------------------------
# One-sided intervals
# ---------------------------------------------------------------------------


def _check_one_sided(pop):
    if pop.n == 0:
        raise ValueError("empty population")
    lefts = {u.left for u in pop.users}
    thetas = {u.threshold for u in pop.users}
    if len(lefts) != 1 or len(thetas) != 1 or not isinstance(next(iter(thetas)), Direct):
        raise ValueError("one-sided algorithms need equal left endpoints and one Direct threshold")
    return next(iter(thetas)).theta


def _one_sided_sets(pop, j, theta):
    users = pop.users
    rj = users[j].right
    longer = sorted(
        i for i, u in enumerate(users) if i != j and u.speech <= rj and u.right >= rj
    )
    beyond = sorted((i for i, u in enumerate(users) if u.speech > rj), key=lambda i: (users[i].speech, i))
    if theta == 0:
        allowance = len(beyond)
    else:
        allowance = math.floor(len(longer) * (1 - theta) / theta)
    return longer, beyond[:allowance]


def lcc_one_sided(pop: Population) -> LccResult:
    """Largest community when every interval starts at the same left end.

    For each user j the users at or below r_j whose intervals reach at
    least r_j are always content with j; users beyond r_j are added while
    j's compatible fraction stays at least theta.
    """
    theta = _check_one_sided(pop)
    best = None
    for j in range(pop.n):
        longer, extra = _one_sided_sets(pop, j, theta)
        group = [j] + longer + extra
        if _better(group, best):
            best = group
    return _result(best, pop, "one_sided")


@dataclass(frozen=True)
class DynamicWindowPlan:
    phase1: Window
    target: frozenset
    phase2: Window

    def policy(self) -> Phased:
        return Phased(((self.phase1, Advance("superset", self.target)), (self.phase2, Advance("never"))))


def dynamic_window_one_sided(pop: Population) -> DynamicWindowPlan:
    """Two-phase window reaching the one-sided LCC under every fair schedule.

    Phase one admits only the anchor user and the longer-interval users
    compatible with it; once all of them are on, phase two widens the
    window to the users beyond the anchor's interval.
    """
    theta = _check_one_sided(pop)
    best = None
    for j in range(pop.n):
        longer, extra = _one_sided_sets(pop, j, theta)
        group = [j] + longer + extra
        if best is None or _better(group, best[0]):
            best = (group, [j] + longer, extra)
    _, anchor, extra = best
    speech = pop.users
    first = [speech[i].speech for i in anchor]
    second = first + [speech[i].speech for i in extra]
    return DynamicWindowPlan(
        Window(min(first), max(first)), frozenset(anchor), Window(min(second), max(second))
    )


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_window(pop: Population, m: int, seed) -> Window:
    """Core window of a uniform sample of ``m`` users drawn without replacement."""
    if not 1 <= m <= pop.n:
        raise ValueError("sample size must be between 1 and n")
    picked = sorted(random.Random(seed).sample(range(pop.n), m))
    return core_window(Population([pop.users[i] for i in picked]))


def sampling_bound(n, m, theta_min, s_opt, beta) -> float:
    theta_min, beta = Fraction(theta_min), Fraction(beta)
    if theta_min <= Fraction(1, 2) or not 0 < beta < 1:
        raise ValueError("the bound needs theta_min > 1/2 and 0 < beta < 1")
    gap = (theta_min - Fraction(1, 2)) * Fraction(s_opt, n) * (1 - beta)
    return 1 - n * math.exp(-m * float(gap) ** 2)
