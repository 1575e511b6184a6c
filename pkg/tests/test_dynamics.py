import random
from fractions import Fraction as F

import pytest

from gen import random_disutility_population, random_fair_schedule, random_population
from modwin.core import Direct, FromDisutility, Population, UserPrefs, Window
from modwin.dynamics import (
    Advance,
    Cyclic,
    Phased,
    RoundRobin,
    Scripted,
    SeededRandom,
    eligible,
    exact_liminf,
    fair_limit_min,
    initial_state,
    is_stable,
    potential,
    simulate,
    step,
)
from modwin.graph import CapExceeded
from modwin.scenarios import five_user, trolls
from oracles import fair_limit_oracle

W25 = Window(2, 5)


def test_eligible():
    fig = five_user()
    assert eligible(fig, W25) == {0, 1, 2, 4}
    assert eligible(fig, None) == set(range(5))
    assert eligible(Population([]), W25) == set()


def test_step_examples():
    fig = five_user()
    assert step({2}, 4, W25, fig) == {2, 4}
    assert step({0, 1, 2, 4}, 4, W25, fig) == {0, 1, 2}
    assert step({0, 3}, 3, W25, fig) == {0}


def test_initial_state():
    assert initial_state(five_user(), W25) == set()
    assert initial_state(five_user([3]), W25) == set()
    assert initial_state(five_user(range(5)), W25) == {0, 1, 2, 4}


def test_five_user_simulation_settles():
    fig = five_user(range(5))
    for seed in range(10):
        trace = simulate(fig, W25, SeededRandom(seed), 15)
        assert trace.states[-1] == {0, 1, 2}
    assert is_stable({0, 1, 2}, fig, W25)
    assert not is_stable(set(), fig, W25)


def test_five_user_fair_limit():
    report = fair_limit_min(five_user(), W25)
    assert report.min_size == 3
    assert report.equilibria == [frozenset({0, 1, 2})]
    assert report.num_fair_closed_sccs == 1


def test_single_user_and_trolls():
    lone = Population([UserPrefs(0, 1, 0, Direct(1))])
    assert fair_limit_min(lone, Window(0, 0)).min_size == 1
    assert fair_limit_min(trolls(6).expand()).min_size == 1


def test_empty_population_trace():
    trace = simulate(Population([]), None, RoundRobin(()), 5)
    assert trace.states == [frozenset()]


def test_schedules_must_be_fair():
    fig = five_user()
    with pytest.raises(ValueError, match="starves"):
        simulate(fig, None, Cyclic((0, 1, 2)), 10)
    with pytest.raises(ValueError):
        simulate(fig, None, RoundRobin((0, 1, 2, 3, 3)), 10)
    with pytest.raises(ValueError):
        simulate(fig, None, RoundRobin(range(5)), 0)


def test_flat_cap():
    big = Population([UserPrefs(0, 1, 0, Direct(1))] * 16)
    with pytest.raises(CapExceeded, match="use quotient engine"):
        fair_limit_min(big)
    assert fair_limit_min(big, Window(5, 6)).min_size == 0


def test_state_cap_env(monkeypatch):
    monkeypatch.setenv("MODWIN_STATE_CAP", "8")
    with pytest.raises(CapExceeded):
        fair_limit_min(five_user())


def test_trace_csv_and_json():
    trace = simulate(five_user(range(5)), W25, RoundRobin(range(5)), 5)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "t,phase,actor,action,size"
    assert len(lines) == 6
    assert lines[4] == "4,0,3,banned,4"
    assert lines[5] == "5,0,4,leave,3"
    first = trace.to_json()["steps"][0]
    assert first["forced"] == [] and first["actor"] == 0
    assert trace.to_json()["initial"] == [0, 1, 2, 4]


def test_seeded_replay_is_identical():
    pop = random_population(5, 6, 8)
    a = simulate(pop, None, SeededRandom(11), 200)
    b = simulate(pop, None, SeededRandom(11), 200)
    assert a.to_csv() == b.to_csv()


def test_single_mover_and_phase_removals():
    th = Direct(F(1, 2))
    users = [UserPrefs(0, 4, p, th) for p in (0, 1, 2, 3, 4)]
    pop = Population(users, range(5))
    policy = Phased(((Window(0, 4), Advance("superset", {0, 1})), (Window(0, 2), Advance("never"))))
    trace = simulate(pop, policy, RoundRobin(range(5)), 20)
    for prev, cur in zip(trace.states, trace.steps):
        changed = (prev - cur.forced) ^ cur.state
        assert len(changed) <= 1
    assert trace.steps[0].forced == {3, 4}
    assert trace.steps[-1].phase == 1


def test_dynamic_policy_matches_oracle_when_static():
    for seed in range(40):
        pop = random_population(seed, 1, 6)
        assert fair_limit_min(pop, Phased(((None, Advance("never")),))).min_size == fair_limit_oracle(pop)


def test_fair_limit_matches_oracle():
    for seed in range(200):
        pop = random_population(seed, 1, 9)
        window = Window(1, 6) if seed % 2 else None
        assert fair_limit_min(pop, window).min_size == fair_limit_oracle(pop, window), seed


def test_fair_limit_soundness_and_witness():
    rng = random.Random(0)
    for seed in range(120):
        pop = random_population(seed, 1, 8)
        report = fair_limit_min(pop)
        assert exact_liminf(pop, None, report.witness) == report.min_size
        for _ in range(15):
            sched = random_fair_schedule(rng, pop.n)
            assert exact_liminf(pop, None, sched) >= report.min_size


def test_equilibria_are_stable_states():
    for seed in range(100):
        pop = random_population(seed, 1, 8)
        report = fair_limit_min(pop)
        for eq in report.equilibria:
            assert is_stable(eq, pop)


def test_exact_liminf_matches_long_simulation():
    rng = random.Random(1)
    for seed in range(40):
        pop = random_population(seed, 2, 7)
        sched = random_fair_schedule(rng, pop.n)
        trace = simulate(pop, None, sched, 600)
        assert exact_liminf(pop, None, sched) == min(trace.sizes[300:])


def test_potential_examples():
    th = FromDisutility(1, 1)
    near = Population([UserPrefs(0, 1, 0, th), UserPrefs(0, 1, 1, th)])
    far = Population([UserPrefs(0, 0, 0, th), UserPrefs(5, 5, 5, th)])
    assert potential(set(), near) == 0
    assert potential({0, 1}, near) == 2
    assert potential({0, 1}, far) == -2
    mixed = Population([UserPrefs(0, 0, 0, th), UserPrefs(0, 0, 0, FromDisutility(2, 1))])
    with pytest.raises(ValueError):
        potential({0}, mixed)


def test_potential_never_decreases_on_mutual_populations():
    for seed in range(60):
        base = random_disutility_population(seed, 2, 7)
        u0 = base.users[0].threshold
        users = [UserPrefs(u.speech - 2, u.speech + 2, u.speech, u0) for u in base.users]
        pop = Population(users)
        trace = simulate(pop, None, SeededRandom(seed), 100)
        values = [potential(s, pop) for s in trace.states]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert is_stable(trace.states[-1], pop)


def test_scripted_to_json():
    assert Scripted((1,), (0, 1)).to_json() == {"prefix": [1], "cycle": [0, 1]}
