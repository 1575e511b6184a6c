"""Domain types and the utility/compatibility primitives of the model.

All model quantities are exact rationals (``fractions.Fraction``) so that
boundary cases such as a compatible fraction exactly equal to the threshold
are decided without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

Rational = Fraction

INF = math.inf


def rational(value) -> Fraction:
    """Coerce an int, Fraction or "num/den" string to a Fraction.

    Floats are rejected: they would silently smuggle rounding into
    decision paths.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def format_rational(value) -> str:
    if value == INF:
        return "inf"
    if value == -INF:
        return "-inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# Thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Direct:
    """A participation threshold given directly as a fraction in [0, 1]."""

    theta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "theta", rational(self.theta))


@dataclass(frozen=True)
class FromDisutility:
    """A threshold derived from disutility ``b`` and personalization ``lam``."""

    b: Fraction
    lam: Fraction

    def __post_init__(self):
        object.__setattr__(self, "b", rational(self.b))
        object.__setattr__(self, "lam", rational(self.lam))


def threshold_value(spec) -> Fraction:
    if isinstance(spec, Direct):
        return spec.theta
    lb = spec.lam * spec.b
    return lb / (1 + lb)


def disutility_weight(spec) -> Fraction:
    """The weight ``lambda * b`` put on each incompatible user.

    A Direct threshold below one is converted through
    ``theta / (1 - theta)``, which has the same sign behaviour.
    """
    if isinstance(spec, FromDisutility):
        return spec.lam * spec.b
    if spec.theta >= 1:
        raise ValueError("raw utility is unbounded for a threshold of 1; use willing()")
    return spec.theta / (1 - spec.theta)


# ---------------------------------------------------------------------------
# Users, populations, windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UserPrefs:
    left: Fraction
    right: Fraction
    speech: Fraction
    threshold: Direct | FromDisutility

    def __post_init__(self):
        for name in ("left", "right", "speech"):
            object.__setattr__(self, name, rational(getattr(self, name)))

    @property
    def theta(self) -> Fraction:
        return threshold_value(self.threshold)


@dataclass(frozen=True)
class Population:
    users: tuple = ()
    initial_adopters: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "initial_adopters", frozenset(self.initial_adopters))

    @property
    def n(self) -> int:
        return len(self.users)

    def __len__(self):
        return len(self.users)


@dataclass(frozen=True)
class Stack:
    prefs: UserPrefs
    count: int
    initial_on: int = 0


@dataclass(frozen=True)
class StackedPopulation:
    """Groups identical users into stacks with multiplicities."""

    stacks: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "stacks", tuple(self.stacks))

    @property
    def n(self) -> int:
        return sum(s.count for s in self.stacks)

    def offsets(self) -> list[int]:
        """First flat id of every stack."""
        out, acc = [], 0
        for s in self.stacks:
            out.append(acc)
            acc += s.count
        return out

    def expand(self) -> Population:
        users, adopters = [], set()
        for s in self.stacks:
            start = len(users)
            users.extend([s.prefs] * s.count)
            adopters.update(range(start, start + s.initial_on))
        return Population(tuple(users), frozenset(adopters))


@dataclass(frozen=True)
class Window:
    """A closed moderation window; ``lo`` and ``hi`` may be infinite."""

    lo: Fraction | float = -INF
    hi: Fraction | float = INF

    def __post_init__(self):
        for name in ("lo", "hi"):
            v = getattr(self, name)
            if not (isinstance(v, float) and math.isinf(v)):
                object.__setattr__(self, name, rational(v))

    def __contains__(self, point) -> bool:
        return self.lo <= point <= self.hi

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def width(self):
        if self.is_empty:
            return -INF
        return self.hi - self.lo

    def __str__(self):
        if self.is_empty:
            return "empty"
        return f"[{format_rational(self.lo)},{format_rational(self.hi)}]"


FULL_WINDOW = Window(-INF, INF)
# The only window allowed to violate lo <= hi: it admits nobody.
EMPTY_WINDOW = Window(INF, -INF)


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def compatible(viewer: UserPrefs, speech_point) -> bool:
    return viewer.left <= speech_point <= viewer.right


def _counts(i, on_platform, pop):
    viewer = pop.users[i]
    c = d = 0
    for j in on_platform:
        if j == i:
            continue
        if compatible(viewer, pop.users[j].speech):
            c += 1
        else:
            d += 1
    return c, d


def utility(i, on_platform, pop) -> Fraction:
    """Compatible others minus ``lambda * b`` times incompatible others."""
    c, d = _counts(i, on_platform, pop)
    return c - disutility_weight(pop.users[i].threshold) * d


def willing(i, on_platform, pop) -> bool:
    c, d = _counts(i, on_platform, pop)
    if c + d == 0:
        return True
    return Fraction(c, c + d) >= pop.users[i].theta


def mutually_compatible(i, j, pop) -> bool:
    if i == j:
        raise ValueError("mutual compatibility needs two distinct users")
    a, b = pop.users[i], pop.users[j]
    return compatible(a, b.speech) and compatible(b, a.speech)


def validate(pop) -> list[str]:
    """Return every invariant violation found; an empty list means valid."""
    problems = []
    if isinstance(pop, StackedPopulation):
        users = [s.prefs for s in pop.stacks]
        for k, s in enumerate(pop.stacks):
            if s.count < 1:
                problems.append(f"stack {k}: count must be positive")
            if not 0 <= s.initial_on <= s.count:
                problems.append(f"stack {k}: initial_on out of range")
    else:
        users = pop.users
        for a in sorted(pop.initial_adopters):
            if not 0 <= a < pop.n:
                problems.append(f"adopter out of range: {a}")
    for k, u in enumerate(users):
        if not u.left <= u.speech <= u.right:
            problems.append(f"user {k}: speech not in interval")
        t = u.threshold
        if isinstance(t, Direct):
            if not 0 <= t.theta <= 1:
                problems.append(f"user {k}: theta outside [0,1]")
        else:
            if t.b <= 0:
                problems.append(f"user {k}: b must be positive")
            if not 0 <= t.lam <= 1:
                problems.append(f"user {k}: lambda outside [0,1]")
    return problems
