"""Window enumeration and optimization for size-maximizing and ideological platforms."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial

from .core import EMPTY_WINDOW, StackedPopulation, Window, rational
from .dynamics import analyze, fair_limit_min
from .quotient import QuotientEngine, fair_limit_min_quotient


def parallel_map(fn, items, jobs=1):
    """Map in order, optionally across processes; results keep input order."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class IdeologicalPlatform:
    interval: Window
    d: Fraction

    def __post_init__(self):
        object.__setattr__(self, "d", rational(self.d))
        if self.d <= 0:
            raise ValueError("d must be positive")


@dataclass
class WindowSearchReport:
    best_window: Window
    objective_value: Fraction
    per_candidate: list

    def to_json(self):
        from .dynamics import window_json

        return {
            "best_window": window_json(self.best_window),
            "objective_value": str(self.objective_value),
            "per_candidate": [
                {"window": window_json(w), "value": str(v)} for w, v in self.per_candidate
            ],
        }


def _speeches(pop):
    if isinstance(pop, StackedPopulation):
        return {s.prefs.speech for s in pop.stacks}
    return {u.speech for u in pop.users}


def candidate_windows(pop) -> list:
    values = sorted(_speeches(pop))
    out = [EMPTY_WINDOW]
    for a in range(len(values)):
        for b in range(a, len(values)):
            out.append(Window(values[a], values[b]))
    return out


def _pick(per_candidate):
    best = None
    for w, v in per_candidate:
        key = (-v, w.width, w.lo)
        if best is None or key < best[0]:
            best = (key, w, v)
    return best[1], best[2]


def fair_size(pop, window=None, cap=None) -> int:
    """Guaranteed limiting size under a static window, using the fitting engine."""
    if isinstance(pop, StackedPopulation):
        return fair_limit_min_quotient(pop, window, cap).min_size
    return fair_limit_min(pop, window, cap).min_size


def best_guaranteed_window(pop, jobs=1, cap=None) -> WindowSearchReport:
    windows = candidate_windows(pop)
    values = parallel_map(partial(_size_job, pop, cap), windows, jobs)
    per = list(zip(windows, values))
    best, value = _pick(per)
    return WindowSearchReport(best, Fraction(value), per)


def _size_job(pop, cap, window):
    if window.is_empty:
        return 0
    return fair_size(pop, window, cap)


def platform_utility(state, platform: IdeologicalPlatform, pop) -> Fraction:
    total = Fraction(0)
    for i in state:
        total += 1 if pop.users[i].speech in platform.interval else -platform.d
    return total


def worst_platform_utility(pop, window, platform, cap=None) -> Fraction:
    """Minimum platform utility over states of reachable fair-closed components."""
    if isinstance(pop, StackedPopulation):
        engine = QuotientEngine(pop, window, cap)
        weights = [
            Fraction(1) if s.prefs.speech in platform.interval else -platform.d for s in pop.stacks
        ]
        analysis = engine.analyze()
        return analysis.minimize(lambda st: sum(w * c for w, c in zip(weights, st)))[0]
    engine, analysis = analyze(pop, window, cap)
    return analysis.minimize(lambda st: platform_utility(engine.decode(st), platform, pop))[0]


def _ideology_job(pop, platform, cap, window):
    if window.is_empty:
        return Fraction(0)
    return worst_platform_utility(pop, window, platform, cap)


def best_ideological_window(pop, platform, jobs=1, cap=None) -> WindowSearchReport:
    windows = candidate_windows(pop)
    values = parallel_map(partial(_ideology_job, pop, platform, cap), windows, jobs)
    per = list(zip(windows, values))
    best, value = _pick(per)
    return WindowSearchReport(best, value, per)
