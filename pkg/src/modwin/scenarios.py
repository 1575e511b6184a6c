"""Parameterized generators for the worked constructions.

Fractional group sizes are realized only when they are exact integers;
generators raise ``ValueError`` naming the violated constraint otherwise.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .competition import CompetitorStack, Platform, StackedCompetition
from .core import (
    FULL_WINDOW,
    Direct,
    FromDisutility,
    Population,
    Stack,
    StackedPopulation,
    UserPrefs,
    Window,
    rational,
    validate,
)
from .dynamics import Cyclic, RoundRobin
from .policy import IdeologicalPlatform

F = Fraction


def _whole(value, what):
    value = F(value)
    if value.denominator != 1:
        raise ValueError(f"{what} must be an integer, got {value}")
    return int(value)


def _checked(pop):
    problems = validate(pop)
    if problems:
        raise AssertionError(f"generated population is invalid: {problems}")
    return pop


def five_user(initial_adopters=()) -> Population:
    """Five users with threshold 1; ids 0..4 stand for users labelled 1..5."""
    layout = [(2, 4, 6), (2, 5, 5), (1, 2, 5), (2, 6, 6), (2, 3, 3)]
    users = [UserPrefs(l, r, p, Direct(1)) for l, p, r in layout]
    return _checked(Population(users, initial_adopters))


def trolls(n, theta=F(1, 2)) -> StackedPopulation:
    """n - 1 identical users and one troll they all find incompatible.

    The troll's interval covers everyone, so it always joins, and it speaks
    beyond every other user's interval.
    """
    theta = rational(theta)
    if n < 2:
        raise ValueError("trolls needs n >= 2")
    if not 0 < theta <= 1:
        raise ValueError("trolls needs 0 < theta <= 1")
    crowd = UserPrefs(0, 2, 1, Direct(theta))
    troll = UserPrefs(0, 3, 3, Direct(theta))
    return _checked(StackedPopulation([Stack(crowd, n - 1), Stack(troll, 1)]))


@dataclass(frozen=True)
class IdeologicalScenario:
    population: StackedPopulation
    platform: IdeologicalPlatform


def ideological(n, d=1) -> IdeologicalScenario:
    """Four equal groups; the platform likes positions 2..4 but group 1 props up group 2."""
    if n % 4:
        raise ValueError("ideological needs n divisible by 4")
    th = Direct(F(1, 5))
    groups = [(1, 1, 4), (1, 2, 2), (2, 3, 3), (3, 4, 4)]
    pop = StackedPopulation([Stack(UserPrefs(l, r, p, th), n // 4) for l, p, r in groups])
    return IdeologicalScenario(_checked(pop), IdeologicalPlatform(Window(2, 4), rational(d)))


@dataclass(frozen=True)
class PersonalizationScenario:
    """The same users under coarse (``lam``) and finer (``lam_fine``) personalization."""

    coarse: StackedPopulation
    fine: StackedPopulation
    sizes: tuple


def personalization_gap(b=1, lam=1, lam_fine=F(4, 5), max_n=5000) -> PersonalizationScenario:
    """Smallest instance where finer personalization shrinks the guaranteed size.

    Groups 1..4 sit at positions 1..4 with intervals [1,2], [1,2], [2,3],
    [2,4]; groups 1, 2 and 4 start on the platform.  Sizes are the smallest
    satisfying the construction's inequalities, plus the requirement that a
    group-3 user facing all ``n0`` starting users is willing to join under
    the finer threshold (it counts every starting user as an other).
    """
    b, lam, lam_fine = rational(b), rational(lam), rational(lam_fine)
    if not 0 < lam_fine < lam <= 1:
        raise ValueError("need 0 < lam_fine < lam <= 1")
    theta = lam * b / (1 + lam * b)
    theta_fine = lam_fine * b / (1 + lam_fine * b)
    beta = theta_fine / theta
    found = None
    for n0 in range(3, max_n):
        t4 = math.floor((1 - theta) * (n0 - 1))
        lo2 = max((2 * theta - 1) * n0 + 1, beta * theta * (n0 - 1))
        hi2 = theta * (n0 - 1)
        for t2 in range(math.floor(lo2) + 1, math.ceil(hi2)):
            if t2 < theta_fine * n0:
                continue
            t1 = math.ceil(theta * (n0 - 1)) + 1 - t2
            if t1 < 1 or t1 + t2 + t4 != n0 or t4 < 1:
                continue
            lo3 = ((1 - beta) * math.ceil(theta * n0) + 1) / (beta * theta)
            t3 = math.floor(lo3) + 1
            if not t3 < t4:
                continue
            n = n0 + t3
            if beta < F(math.ceil(theta * n) + 1, n - 1):
                continue
            found = (t1, t2, t3, t4)
            break
        if found:
            break
    if not found:
        raise ValueError("no sizes satisfy the construction's inequalities (beta too small?)")

    def build(weight):
        th = FromDisutility(b, weight)
        shapes = [(1, 1, 2), (1, 2, 2), (2, 3, 3), (2, 4, 4)]
        stacks = []
        for (l, p, r), count, start in zip(shapes, found, (True, True, False, True)):
            stacks.append(Stack(UserPrefs(l, r, p, th), count, count if start else 0))
        return _checked(StackedPopulation(stacks))

    return PersonalizationScenario(build(lam), build(lam_fine), found)


def insurgency(n, eps=F(1, 10), gamma=1) -> StackedCompetition:
    """A large platform whose outer groups defect to an open competitor."""
    eps = rational(eps)
    if not 0 < eps < F(1, 2):
        raise ValueError("insurgency needs 0 < eps < 1/2")
    counts = [
        _whole(eps * n, "eps*n"),
        _whole((F(1, 2) - eps) * n, "(1/2-eps)*n"),
        _whole((1 - eps) * n / 2, "(1-eps)*n/2"),
        _whole(eps * n / 2, "eps*n/2"),
    ]
    th = FromDisutility(1, 1)
    shapes = [(1, 1, 2), (2, 2, 4), (2, 3, 4), (1, 4, 4)]
    stacks = []
    for g, ((l, p, r), c) in enumerate(zip(shapes, counts)):
        start = (c,) if g < 3 else ()
        stacks.append(CompetitorStack(UserPrefs(l, r, p, th), c, gamma, start))
    platforms = (Platform(Window(1, 3)), Platform(FULL_WINDOW))
    return StackedCompetition(stacks, platforms)


def incumbency(M=95, u=3, window1=FULL_WINDOW, window2=FULL_WINDOW, gamma=1) -> StackedCompetition:
    """A large intolerant stack flanked by tolerant singles, all on platform 1.

    Users banned from platform 1 but admitted by platform 2 start there.
    """
    if M < 2 or u < 1:
        raise ValueError("incumbency needs M >= 2 and u >= 1")
    theta = F(M - 1, M + 2 * u - 1)
    th = FromDisutility(theta / (1 - theta), 1)
    mid = u + 1
    singles = [p for p in range(1, 2 * u + 2) if p != mid]
    prefs = [(UserPrefs(1, 2 * u + 1, p, th), 1) for p in singles[:u]]
    prefs.append((UserPrefs(F(2 * mid - 1, 2), F(2 * mid + 1, 2), mid, th), M))
    prefs += [(UserPrefs(1, 2 * u + 1, p, th), 1) for p in singles[u:]]
    stacks = []
    for pr, c in prefs:
        if pr.speech in window1:
            start = (c,)
        elif pr.speech in window2:
            start = (0, c)
        else:
            start = ()
        stacks.append(CompetitorStack(pr, c, gamma, start))
    return StackedCompetition(stacks, (Platform(window1), Platform(window2)))


def cycling_single(n) -> StackedPopulation:
    """Three groups with no stable arrangement (threshold 2/3)."""
    if n % 20:
        raise ValueError("cycling-single needs n divisible by 20")
    th = FromDisutility(2, 1)
    shapes = [((2, 2, 4), F(1, 5)), ((2, 3, 3), F(9, 20)), ((3, 4, 4), F(7, 20))]
    return _checked(
        StackedPopulation([Stack(UserPrefs(l, r, p, th), int(share * n)) for (l, p, r), share in shapes])
    )


def cycling_multi(n, gamma=1) -> StackedCompetition:
    """Two open platforms that groups 2 and 3 keep swapping between (threshold 7/9)."""
    if n % 10:
        raise ValueError("cycling-multi needs n divisible by 10")
    th = FromDisutility(F(7, 2), 1)
    shapes = [
        ((1, 1, 4), F(1, 10), (1,)),
        ((1, 2, 2), F(6, 10), (1,)),
        ((2, 3, 3), F(2, 10), (1,)),
        ((1, 1, 4), F(1, 10), (0, 1)),
    ]
    stacks = []
    for (l, p, r), share, start in shapes:
        c = int(share * n)
        stacks.append(CompetitorStack(UserPrefs(l, r, p, th), c, gamma, tuple(x * c for x in start)))
    return StackedCompetition(stacks, (Platform(FULL_WINDOW), Platform(FULL_WINDOW)))


def block_schedule(stacks_or_counts, blocks):
    """Cyclic schedule acting stack by stack in the given block order."""
    counts = [getattr(s, "count", s) for s in stacks_or_counts]
    offsets = [sum(counts[:k]) for k in range(len(counts))]
    seq = []
    for b in blocks:
        seq.extend(range(offsets[b], offsets[b] + counts[b]))
    if sorted(set(seq)) == list(range(sum(counts))) and len(seq) == sum(counts):
        return RoundRobin(seq)
    return Cyclic(seq)


def robust_family(n, theta=F(1, 2)) -> Population:
    """Users at 1..n whose intervals overlap a sliding block of neighbours."""
    theta = rational(theta)
    if n < 2 or not 0 < theta < 1:
        raise ValueError("robust-family needs n >= 2 and 0 < theta < 1")
    h = math.ceil(theta * (n - 1))
    users = []
    for i in range(1, n + 1):
        if i <= h:
            users.append(UserPrefs(1, h + 1, i, Direct(theta)))
        else:
            users.append(UserPrefs(i - h, i, i, Direct(theta)))
    return _checked(Population(users, range(n)))


def adversaries_example() -> Population:
    return robust_family(9, F(1, 2))


def theta_upper_bound(theta=F(3, 4), n=12) -> StackedPopulation:
    """Stacks where every window admits a stable platform of at most (2 theta - 1) n + 2.

    Peripheral stacks total 2((1 - theta) n - 1) users; they start at
    (theta - 1/2) n each and the deficit is taken one user at a time from
    the left-most stacks.  At least one peripheral stack per side is
    required.
    """
    theta = rational(theta)
    if not F(1, 2) < theta < 1:
        raise ValueError("theta-upper-bound needs 1/2 < theta < 1")
    q = _whole((theta - F(1, 2)) * n, "(theta-1/2)*n")
    _whole((1 - theta) * n, "(1-theta)*n")
    k = 2 * math.ceil(F((1 - theta) * n - 1) / q) if q else 0
    if k < 2:
        raise ValueError("n too small: the construction needs K >= 2 peripheral stacks")
    total = 2 * ((1 - theta) * n - 1)
    sizes = [q] * k
    deficit = k * q - total
    pos = 0
    while deficit > 0:
        sizes[pos % k] -= 1
        deficit -= 1
        pos += 1
    if min(sizes) < 1:
        raise ValueError("n too small: a peripheral stack would be empty")
    core = q + 1
    everyone = sizes + [core, core]
    lo, hi = (1 - theta) / theta, theta / (1 - theta)
    for a in everyone:
        for b2 in everyone:
            if not lo * a < b2 < hi * a:
                raise ValueError(
                    f"stack sizes {a} and {b2} violate (1-theta)/theta*a < b < theta/(1-theta)*a"
                )
    th = Direct(theta)
    left_end, right_end = 0, k + 3
    half = k // 2
    stacks = []
    for j in range(1, half + 1):
        stacks.append(Stack(UserPrefs(j, right_end, j, th), sizes[j - 1]))
    stacks.append(Stack(UserPrefs(half + 1, right_end, half + 1, th), core))
    stacks.append(Stack(UserPrefs(left_end, half + 2, half + 2, th), core))
    for j in range(half + 3, k + 3):
        stacks.append(Stack(UserPrefs(left_end, j, j, th), sizes[j - 3]))
    return _checked(StackedPopulation(stacks))


def smallest_theta_upper_bound(theta=F(3, 4), limit=1000):
    for n in range(2, limit):
        try:
            return theta_upper_bound(theta, n)
        except ValueError:
            continue
    raise ValueError("no feasible n below the limit")


def one_sided_random(n, theta=F(1, 2), seed=0) -> Population:
    """Random one-sided intervals [0, r] with distinct speech points."""
    theta = rational(theta)
    rng = random.Random(seed)
    points = rng.sample(range(1, 4 * n + 1), n)
    users = [UserPrefs(0, p + rng.randint(0, 2 * n), p, Direct(theta)) for p in points]
    return _checked(Population(users))


def mutual_random(n, b=1, lam=1, seed=0) -> Population:
    """Random users whose compatibilities are all mutual.

    Everyone tolerates the same distance ``w`` around their own speech
    point, so compatibility is symmetric.
    """
    rng = random.Random(seed)
    w = rng.randint(0, 4)
    th = FromDisutility(rational(b), rational(lam))
    users = []
    for _ in range(n):
        p = rng.randint(0, max(1, 3 * n // 2))
        users.append(UserPrefs(p - w, p + w, p, th))
    adopters = [i for i in range(n) if rng.random() < 0.5]
    return _checked(Population(users, adopters))


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: dict = field(default_factory=dict)


GENERATORS = {
    "five-user": five_user,
    "trolls": trolls,
    "ideological": ideological,
    "personalization-gap": personalization_gap,
    "insurgency": insurgency,
    "incumbency": incumbency,
    "cycling-single": cycling_single,
    "cycling-multi": cycling_multi,
    "robust-family": robust_family,
    "adversaries-example": adversaries_example,
    "theta-upper-bound": theta_upper_bound,
    "one-sided-random": one_sided_random,
    "mutual-random": mutual_random,
}


def generate(spec: ScenarioSpec):
    try:
        gen = GENERATORS[spec.name]
    except KeyError:
        raise ValueError(f"unknown scenario {spec.name!r}") from None
    return gen(**spec.params)
