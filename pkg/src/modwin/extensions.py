"""Robustness to population shocks, and users who speak with different frequencies."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial

from .core import Direct, Population, UserPrefs, Window, compatible, rational
from .dynamics import as_policy, fair_limit_min
from .graph import CapExceeded
from .policy import parallel_map


@dataclass(frozen=True)
class Shock:
    removed: frozenset = frozenset()
    added: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "removed", frozenset(self.removed))
        object.__setattr__(self, "added", tuple(self.added))

    @property
    def size(self) -> int:
        return len(self.removed) + len(self.added)

    def to_json(self):
        from .io import prefs_to_json

        return {"removed": sorted(self.removed), "added": [prefs_to_json(u) for u in self.added]}


def apply_shock(pop: Population, shock: Shock) -> Population:
    """Drop removed users (renumbering the rest) and append added ones off-platform."""
    bad = [i for i in shock.removed if not 0 <= i < pop.n]
    if bad:
        raise ValueError(f"shock removes unknown users {sorted(bad)}")
    keep = [i for i in range(pop.n) if i not in shock.removed]
    new_id = {old: new for new, old in enumerate(keep)}
    users = [pop.users[i] for i in keep] + list(shock.added)
    adopters = {new_id[i] for i in pop.initial_adopters if i in new_id}
    return Population(users, adopters)


def speech_regions(pop: Population) -> list:
    """One representative point per region cut out by the interval endpoints.

    Every endpoint is its own region, and so is every open gap between
    consecutive endpoints and the two unbounded rays.
    """
    ends = sorted({u.left for u in pop.users} | {u.right for u in pop.users})
    if not ends:
        return [Fraction(0)]
    points = [ends[0] - 1]
    for a, b in zip(ends, ends[1:]):
        points += [a, (a + b) / 2]
    points += [ends[-1], ends[-1] + 1]
    return points


def addition_grid(pop: Population, windows=None) -> list:
    """Candidate adversarial users: a troll and a single-cell user per region and threshold.

    Users speaking outside every window would be banned forever and are skipped.
    """
    windows = [Window()] if windows is None else list(windows)
    thetas = sorted({u.theta for u in pop.users} | {Fraction(0), Fraction(1)})
    points = speech_regions(pop)
    out = []
    for p in points:
        if not any(p in w for w in windows):
            continue
        # a troll likes everything, so its threshold never matters
        out.append(UserPrefs(points[0], points[-1], p, Direct(0)))
        for t in thetas:
            out.append(UserPrefs(p, p, p, Direct(t)))
    return out


def shock_space(pop: Population, k: int, grid=None) -> list:
    if k < 0:
        raise ValueError("k must be non-negative")
    grid = addition_grid(pop) if grid is None else list(grid)
    shocks = []
    for r in range(0, min(k, pop.n) + 1):
        for removed in itertools.combinations(range(pop.n), r):
            for a in range(0, k - r + 1):
                for added in itertools.combinations_with_replacement(grid, a):
                    shocks.append(Shock(frozenset(removed), added))
    return shocks


@dataclass
class RobustReport:
    size: int
    worst: Shock
    per_shock: list

    def to_json(self):
        worst = [
            {"shock": s.to_json(), "size": v} for s, v in self.per_shock if v == self.size
        ]
        return {"robust_size": self.size, "shocks_checked": len(self.per_shock), "worst": worst}


def _shocked_size(pop, window, cap, shock):
    return fair_limit_min(apply_shock(pop, shock), window, cap).min_size


def robust_report(pop: Population, window=None, k=1, jobs=1, cap=None) -> RobustReport:
    window = as_policy(window)
    grid = addition_grid(pop, [w for w, _ in window.phases])
    shocks = shock_space(pop, k, grid)
    sizes = parallel_map(partial(_shocked_size, pop, window, cap), shocks, jobs)
    per = list(zip(shocks, sizes))
    worst = min(per, key=lambda x: x[1])
    return RobustReport(worst[1], worst[0], per)


def robust_size(pop: Population, window=None, k=1, jobs=1, cap=None) -> int:
    """Smallest guaranteed size over every shock of at most ``k`` users."""
    return robust_report(pop, window, k, jobs, cap).size


def robust_trim_count(theta, k) -> int:
    theta = rational(theta)
    if not 0 < theta < 1:
        raise ValueError("theta must lie strictly between 0 and 1")
    return math.ceil(k * max((1 - theta) / theta, Fraction(1)))


# ---------------------------------------------------------------------------
# Speech frequencies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreqUser:
    prefs: UserPrefs
    f: int

    def __post_init__(self):
        if isinstance(self.f, bool) or not isinstance(self.f, int) or self.f < 1:
            raise ValueError("frequency must be a positive integer")


@dataclass(frozen=True)
class FreqPopulation:
    users: tuple

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))

    @property
    def total(self) -> int:
        return sum(u.f for u in self.users)


def expand_frequencies(fp: FreqPopulation) -> Population:
    """Replace each user by ``f_j`` copies with a threshold raised by (f_j - 1)/(f - 1)."""
    total = fp.total
    if total < 2:
        raise ValueError("total frequency must be at least 2")
    users = []
    for u in fp.users:
        theta = u.prefs.theta + Fraction(u.f - 1, total - 1)
        if theta > 1:
            raise ValueError("frequency too dominant for reduction")
        copy = UserPrefs(u.prefs.left, u.prefs.right, u.prefs.speech, Direct(theta))
        users.extend([copy] * u.f)
    return Population(users)


ORACLE_MAX_USERS = 4
ORACLE_MAX_FREQ = 3


def lcc_variable_frequency_oracle(fp: FreqPopulation) -> int:
    """Largest total speech volume of a community with per-user speech caps.

    A user speaking ``c_j`` times (1 <= c_j <= f_j) is content when the
    speech it hears from others is compatible in at least a theta fraction.
    """
    users = fp.users
    if len(users) > ORACLE_MAX_USERS or any(u.f > ORACLE_MAX_FREQ for u in users):
        raise CapExceeded(
            f"frequency oracle is limited to {ORACLE_MAX_USERS} users with f <= {ORACLE_MAX_FREQ}"
        )
    compat = [[compatible(a.prefs, b.prefs.speech) for b in users] for a in users]
    best = 0
    for caps in itertools.product(*(range(u.f + 1) for u in users)):
        size = sum(caps)
        if size <= best:
            continue
        ok = True
        for j, cj in enumerate(caps):
            if not cj:
                continue
            heard = sum(c for k, c in enumerate(caps) if k != j)
            liked = sum(c for k, c in enumerate(caps) if k != j and compat[j][k])
            if liked < users[j].prefs.theta * heard:
                ok = False
                break
        if ok:
            best = size
    return best
