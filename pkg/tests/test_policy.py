from fractions import Fraction as F

import pytest

from gen import random_population
from modwin.core import EMPTY_WINDOW, Direct, Population, UserPrefs, Window
from modwin.dynamics import fair_limit_min
from modwin.policy import (
    IdeologicalPlatform,
    best_guaranteed_window,
    best_ideological_window,
    candidate_windows,
    fair_size,
    parallel_map,
    platform_utility,
    worst_platform_utility,
)
from modwin.scenarios import five_user, ideological, trolls


def test_candidate_windows_counts():
    assert len(candidate_windows(Population([UserPrefs(0, 0, 0, Direct(1))] * 3))) == 2
    three = Population([UserPrefs(0, 2, p, Direct(1)) for p in (0, 1, 2)])
    assert len(candidate_windows(three)) == 7
    assert len(candidate_windows(five_user())) == 16
    assert candidate_windows(five_user())[0] == EMPTY_WINDOW


def test_best_window_five_user():
    report = best_guaranteed_window(five_user())
    assert report.best_window == Window(2, 5)
    assert report.objective_value == 3
    assert len(report.per_candidate) == 16
    js = report.to_json()
    assert js["best_window"] == ["2", "5"] and js["objective_value"] == "3"


def test_best_window_dominates_every_candidate():
    for seed in range(40):
        pop = random_population(seed, 1, 7)
        report = best_guaranteed_window(pop)
        for w, v in report.per_candidate:
            assert v <= report.objective_value
            if not w.is_empty:
                assert v == fair_limit_min(pop, w).min_size


def test_trolls_prefer_a_window():
    pop = trolls(8)
    report = best_guaranteed_window(pop)
    assert report.objective_value == 7
    assert fair_size(pop) == 1


def test_parallel_map_keeps_order():
    assert parallel_map(abs, [-3, 1, -2], jobs=2) == [3, 1, 2]
    assert parallel_map(abs, [-1], jobs=4) == [1]


def test_platform_utility():
    sc = ideological(20, 1)
    pop = sc.population.expand()
    assert platform_utility(frozenset(), sc.platform, pop) == 0
    inside = frozenset(range(5, 20))
    assert platform_utility(inside, sc.platform, pop) == 15
    assert platform_utility(frozenset(range(20)), sc.platform, pop) == 10


def test_ideological_wide_window():
    sc = ideological(20, 1)
    assert worst_platform_utility(sc.population, Window(1, 4), sc.platform) == 10
    assert worst_platform_utility(sc.population, Window(2, 4), sc.platform) == 5
    report = best_ideological_window(sc.population, sc.platform)
    assert report.best_window == Window(1, 4) and report.objective_value == 10
    flat = ideological(8, 1)
    assert worst_platform_utility(flat.population.expand(), Window(1, 4), flat.platform) == 4


def test_ideological_platform_validation():
    with pytest.raises(ValueError):
        IdeologicalPlatform(Window(0, 1), 0)
    assert IdeologicalPlatform(Window(0, 1), "1/2").d == F(1, 2)
