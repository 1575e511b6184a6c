"""The sixteen acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are printed
at the end of the session (and are also written with ``-s``).  Criteria that
cannot hold as stated are asserted unchanged and marked as expected failures.
"""

import random
import time
from fractions import Fraction as F

import pytest

from modwin.competition import (
    CompetitionConfig,
    MultiQuotientEngine,
    Platform,
    multi_fair_limit,
    multi_is_stable,
    multi_potential,
    multi_simulate,
    multi_step,
)
from modwin.core import EMPTY_WINDOW, FULL_WINDOW, Direct, FromDisutility, Population, UserPrefs, Window
from modwin.dynamics import (
    SeededRandom,
    analyze,
    exact_liminf,
    fair_limit_min,
    is_stable,
    potential,
    schedule_prefix_cycle,
    simulate,
)
from modwin.extensions import (
    FreqPopulation,
    FreqUser,
    expand_frequencies,
    lcc_variable_frequency_oracle,
    robust_size,
    robust_trim_count,
)
from modwin.lcc import (
    core_window,
    dynamic_window_one_sided,
    lcc_exact,
    lcc_one_sided,
    lcc_theta_one,
    mutually_compatible_core,
    sample_window,
    sampling_bound,
)
from modwin.policy import best_guaranteed_window, best_ideological_window, fair_size, IdeologicalPlatform
from modwin.quotient import fair_limit_min_quotient, stable_count_vectors
from modwin import scenarios
from modwin.core import Stack, StackedPopulation

from gen import random_fair_schedule, random_population, random_stacked

RESULTS = {}


def record(number, ok, detail=""):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
    RESULTS[number] = line
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------


def test_c01_five_user_figure():
    t0 = time.perf_counter()
    pop = scenarios.five_user()
    lcc = lcc_exact(pop)
    size = fair_limit_min(pop, Window(2, 5)).min_size
    elapsed = time.perf_counter() - t0
    ok = lcc.members == frozenset({0, 1, 2}) and size == 3 == lcc.size and elapsed < 1
    record(1, ok, f"lcc={sorted(lcc.members)} fair([2,5])={size} in {elapsed:.2f}s")


def test_c02_theta_one_algorithm():
    t0 = time.perf_counter()
    mismatches = 0
    for seed in range(300):
        pop = random_population(seed, 1, 10, theta_choices=[F(1)])
        if lcc_theta_one(pop).size != lcc_exact(pop).size:
            mismatches += 1
    elapsed = time.perf_counter() - t0
    record(2, mismatches == 0 and elapsed < 30, f"300 populations, {mismatches} mismatches, {elapsed:.1f}s")


def _core_lower_bound_case(seed):
    pop = random_population(seed, 1, 12, theta_choices=[F(3, 5), F(2, 3), F(3, 4), F(4, 5), F(1)])
    theta_min = min(u.theta for u in pop.users)
    window = core_window(pop)
    core = mutually_compatible_core(pop).members
    engine, analysis = analyze(pop, window)
    size = analysis.minimize(lambda s: (s & engine.full).bit_count())[0]
    bound = (2 * theta_min - 1) * lcc_exact(pop).size
    contains = all(core <= engine.decode(s) for comp in analysis.fair_states() for s in comp)
    return size >= bound, contains


def test_c03_core_window_lower_bound():
    t0 = time.perf_counter()
    violations = missing_core = 0
    for seed in range(200):
        ok, contains = _core_lower_bound_case(1000 + seed)
        violations += not ok
        missing_core += not contains
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and missing_core == 0 and elapsed < 300
    record(3, ok, f"200 populations, {violations} bound violations, {missing_core} core losses, {elapsed:.1f}s")


def test_c04_upper_bound_construction():
    t0 = time.perf_counter()
    theta = F(3, 4)
    pop = scenarios.smallest_theta_upper_bound(theta)
    n = pop.n
    report = best_guaranteed_window(pop)
    limit = (2 * theta - 1) * n + 2
    elapsed = time.perf_counter() - t0
    ok = report.objective_value <= limit and elapsed < 120
    record(4, ok, f"n={n}, best window value {report.objective_value} <= {limit}, {elapsed:.1f}s")


def test_c05_trolls():
    pop = scenarios.trolls(12)
    none = fair_limit_min_quotient(pop).min_size
    best = best_guaranteed_window(pop).objective_value
    ratios = []
    for n in range(6, 15):
        p = scenarios.trolls(n)
        ratios.append(best_guaranteed_window(p).objective_value / fair_limit_min_quotient(p).min_size)
    diffs = {b - a for a, b in zip(ratios, ratios[1:])}
    linear = len(diffs) == 1 and next(iter(diffs)) > 0
    ok = none == 1 and best == 11 and linear
    record(5, ok, f"no moderation {none}, best window {best}, gap {ratios[0]}..{ratios[-1]} step {diffs}")


def test_c06_cycling_single():
    pop = scenarios.cycling_single(20)
    stable = stable_count_vectors(pop)
    flat = pop.expand()
    schedule = scenarios.block_schedule(pop.stacks, [0, 1, 2])
    trace = simulate(flat, None, schedule, 10_000)
    never = not any(is_stable(s, flat) for s in set(trace.states))
    record(6, not stable and never, f"{len(stable)} stable count vectors, trace stable: {not never}")


def _settled_trace(pop, schedule, cap):
    # stable states are absorbing, so a longer horizon only appends copies
    horizon = 4 * pop.n
    while True:
        trace = simulate(pop, None, schedule, horizon)
        if horizon >= cap or is_stable(trace.states[-1], pop):
            return trace
        horizon = min(2 * horizon, cap)


def _mutual_case(seed):
    rng = random.Random(seed)
    b = F(rng.randint(1, 5), rng.randint(1, 2))
    lam = F(rng.randint(1, 4), 4)
    pop = scenarios.mutual_random(rng.randint(2, 10), b, lam, seed)
    bad = 0
    for r in range(10):
        trace = _settled_trace(pop, SeededRandom(seed * 100 + r), 40 * pop.n * pop.n + 40)
        states = trace.states
        changes = [(a, c) for a, c in zip(states, states[1:]) if a != c]
        for prev, nxt in changes:
            pa, pb = potential(prev, pop), potential(nxt, pop)
            if len(nxt) > len(prev) and pb < pa:
                bad += 1
            if len(nxt) < len(prev) and pb <= pa:
                bad += 1
        if not is_stable(states[-1], pop):
            bad += 1
    return bad


def test_c07_mutual_convergence():
    t0 = time.perf_counter()
    bad = sum(_mutual_case(seed) for seed in range(500))
    elapsed = time.perf_counter() - t0
    record(7, bad == 0 and elapsed < 300, f"500 populations x 10 schedules, {bad} violations, {elapsed:.1f}s")


def sampling_population():
    th = Direct(1)
    return StackedPopulation([
        Stack(UserPrefs(-1, 1, 0, th), 500),
        Stack(UserPrefs(-1, 0, -1, th), 400),
        Stack(UserPrefs(0, 1, 1, th), 50),
        Stack(UserPrefs(5, 5, 5, th), 50),
    ])


SAMPLING_S_OPT = 900


def test_c08_sampling():
    t0 = time.perf_counter()
    pop = sampling_population()
    flat = pop.expand()
    beta, theta_min = F(1, 4), F(1)
    target = beta * (2 * theta_min - 1) * SAMPLING_S_OPT
    cache = {}
    violations = []
    details = []
    for m in (50, 100, 200):
        hits = 0
        for trial in range(200):
            w = sample_window(flat, m, seed=m * 1000 + trial)
            if w not in cache:
                cache[w] = fair_size(pop, w)
            hits += cache[w] >= target
        freq = hits / 200
        bound = sampling_bound(pop.n, m, theta_min, SAMPLING_S_OPT, beta)
        details.append(f"m={m}: {freq:.3f} vs bound {bound:.3f}")
        if bound > 0 and freq < bound:
            violations.append(m)
    elapsed = time.perf_counter() - t0
    record(8, not violations and elapsed < 300, "; ".join(details) + f", {elapsed:.1f}s")


def test_c09_ideological():
    sc = scenarios.ideological(20, 1)
    report = best_ideological_window(sc.population, sc.platform)
    at_interval = dict(report.per_candidate)[Window(2, 4)]
    trolls = scenarios.trolls(12)
    everything = IdeologicalPlatform(FULL_WINDOW, 1)
    troll_best = best_ideological_window(trolls, everything).best_window
    narrower = troll_best.width < everything.interval.width
    ok = (
        report.objective_value == 10
        and report.best_window == Window(1, 4)
        and at_interval == 5
        and narrower
    )
    record(
        9,
        ok,
        f"best {report.best_window} value {report.objective_value}, interval window value {at_interval}, "
        f"trolls best {troll_best}",
    )


def _lower_lambda(pop, factor):
    users = [
        UserPrefs(u.left, u.right, u.speech, FromDisutility(u.threshold.b, u.threshold.lam * factor))
        for u in pop.users
    ]
    return Population(users, pop.initial_adopters)


def test_c10_personalization():
    from gen import random_disutility_population

    shrinks = 0
    for seed in range(200):
        pop = random_disutility_population(seed, 1, 9)
        if lcc_exact(_lower_lambda(pop, F(1, 2))).size < lcc_exact(pop).size:
            shrinks += 1
    sc = scenarios.personalization_gap()
    coarse = best_guaranteed_window(sc.coarse).objective_value
    fine = best_guaranteed_window(sc.fine).objective_value
    ok = shrinks == 0 and coarse > fine
    record(10, ok, f"{shrinks} monotonicity violations; gap instance {sc.sizes}: {coarse} > {fine}")


def incumbency_holds():
    points = range(1, 8)
    w1s = [Window(a, b) for a in points for b in points if a <= 4 <= b]
    w2s = [EMPTY_WINDOW] + [Window(a, b) for a in points for b in points if a <= b]
    failures = 0
    for gamma in (1, "inf"):
        for w1 in w1s:
            for w2 in w2s:
                cfg = scenarios.incumbency(95, 3, w1, w2, gamma)
                engine = MultiQuotientEngine(cfg)
                start = engine.initial()
                report = multi_fair_limit(cfg, 0)
                if not engine.is_stable(start) or report.min_size != engine.sizes(start)[0]:
                    failures += 1
    return failures, 2 * len(w1s) * len(w2s)


@pytest.mark.xfail(strict=True, reason="worst fair schedule leaves 1 user on platform 1, not 4")
def test_c11_competition():
    t0 = time.perf_counter()
    insurgent = multi_fair_limit(scenarios.insurgency(40, F(1, 10)), 0).min_size
    failures, total = incumbency_holds()
    elapsed = time.perf_counter() - t0
    ok = insurgent == 4 and failures == 0 and elapsed < 300
    record(
        11,
        ok,
        f"insurgency platform-1 minimum {insurgent} (expected 4); incumbency {total - failures}/{total}, "
        f"{elapsed:.1f}s",
    )


def _cycles_forever(cfg, schedule):
    """Exact: run whole cycles until an assignment repeats at a cycle boundary."""
    prefix, cycle = schedule_prefix_cycle(schedule)
    state = tuple(cfg.initial)
    for i in prefix:
        state = multi_step(state, i, cfg)
    seen = set()
    while state not in seen:
        seen.add(state)
        for i in cycle:
            if multi_is_stable(state, cfg):
                return False
            state = multi_step(state, i, cfg)
    return True


def _multi_potential_case(seed):
    rng = random.Random(seed)
    pop = scenarios.mutual_random(rng.randint(2, 7), F(rng.randint(1, 4), 2), 1, seed)
    n = pop.n
    initial = tuple(rng.choice([None, 0, 1]) for _ in range(n))
    cfg = CompetitionConfig(pop.users, (Platform(FULL_WINDOW), Platform(FULL_WINDOW)), initial, (n,) * n)
    bad = 0
    trace = multi_simulate(cfg, SeededRandom(seed), 30 * n * n)
    states = trace.states
    pots = [multi_potential(s, cfg) for s in states]
    for a, b, pa, pb in zip(states, states[1:], pots, pots[1:]):
        if a == b:
            continue
        moved = next(i for i in range(n) if a[i] != b[i])
        if pb < pa or (a[moved] is not None and pb <= pa):
            bad += 1
    if not multi_is_stable(states[-1], cfg):
        bad += 1
    return bad


def test_c12_multi_platform_cycling():
    prop = scenarios.cycling_multi(30, gamma=1)
    util = scenarios.cycling_multi(30, gamma=30)
    prop_cycles = _cycles_forever(prop.expand(), scenarios.block_schedule(prop.stacks, [0, 1, 2, 3]))
    util_cycles = _cycles_forever(util.expand(), scenarios.block_schedule(util.stacks, [0, 1, 2, 3, 1, 2]))
    bad = sum(_multi_potential_case(seed) for seed in range(200))
    ok = prop_cycles and util_cycles and bad == 0
    record(12, ok, f"proportion cycles {prop_cycles}, utility cycles {util_cycles}, potential violations {bad}")


def test_c13_robustness():
    t0 = time.perf_counter()
    adv = scenarios.adversaries_example()
    full = robust_size(adv, None, 1)
    trimmed = robust_size(adv, Window(1, 7), 1)
    family_fail = []
    for theta in (F(1, 3), F(1, 2), F(2, 3)):
        for k in (1, 2):
            for n in range(4, 13):
                trim = robust_trim_count(theta, k)
                kept = n - trim
                if kept < 1:
                    continue
                pop = scenarios.robust_family(n, theta)
                if robust_size(pop, Window(1, kept), k, jobs=4) < kept - k:
                    family_fail.append((theta, k, n))
    core_fail = 0
    for seed in range(40):
        pop = random_population(5000 + seed, 2, 7, theta_choices=[F(2, 3), F(3, 4), F(1)])
        theta_min = min(u.theta for u in pop.users)
        s_opt = lcc_exact(pop).size
        for k in (1, 2):
            if robust_size(pop, core_window(pop), k, jobs=4) < (2 * theta_min - 1) * s_opt - k:
                core_fail += 1
    elapsed = time.perf_counter() - t0
    ok = full == 1 and trimmed == 6 and not family_fail and core_fail == 0
    record(
        13,
        ok,
        f"example {full} / {trimmed}; family failures {family_fail}; core-window failures {core_fail}, "
        f"{elapsed:.1f}s",
    )


def static_shortfall_fixture():
    th = Direct(F(1, 2))
    return Population([
        UserPrefs(0, 1, 1, th),
        UserPrefs(0, 2, F(1, 5), th),
        UserPrefs(0, 2, F(2, 5), th),
        UserPrefs(0, 3, 3, th),
        UserPrefs(0, F(7, 2), F(7, 2), th),
    ])


def test_c14_one_sided():
    mismatches = dynamic_short = 0
    for seed in range(200):
        rng = random.Random(seed)
        pop = scenarios.one_sided_random(rng.randint(1, 10), rng.choice([F(1, 3), F(1, 2), F(2, 3), F(3, 4)]), seed)
        size = lcc_exact(pop).size
        if lcc_one_sided(pop).size != size:
            mismatches += 1
        plan = dynamic_window_one_sided(pop)
        if fair_limit_min(pop, plan.policy()).min_size != size:
            dynamic_short += 1
    fixture = static_shortfall_fixture()
    static = best_guaranteed_window(fixture).objective_value
    dynamic = fair_limit_min(fixture, dynamic_window_one_sided(fixture).policy()).min_size
    ok = mismatches == 0 and dynamic_short == 0 and static < dynamic == lcc_exact(fixture).size
    record(
        14,
        ok,
        f"{mismatches} LCC mismatches, {dynamic_short} dynamic shortfalls; fixture static {static} < dynamic {dynamic}",
    )


def frequency_suite():
    rng = random.Random(7)
    cases = []
    while len(cases) < 150:
        n = rng.randint(1, 4)
        users = []
        for _ in range(n):
            p = rng.randint(0, 6)
            prefs = UserPrefs(p - rng.randint(0, 3), p + rng.randint(0, 3), p,
                              Direct(rng.choice([F(0), F(1, 4), F(1, 2)])))
            users.append(FreqUser(prefs, rng.randint(1, 3)))
        fp = FreqPopulation(users)
        if fp.total < 2:
            continue
        try:
            expanded = expand_frequencies(fp)
        except ValueError:
            continue
        cases.append((fp, expanded))
    return cases


@pytest.mark.xfail(strict=True, reason="the threshold shift does not preserve the largest community in general")
def test_c15_frequency_reduction():
    mismatches = 0
    cases = frequency_suite()
    for fp, expanded in cases:
        if lcc_variable_frequency_oracle(fp) != lcc_exact(expanded).size:
            mismatches += 1
    record(15, mismatches == 0, f"{mismatches} of {len(cases)} instances differ")


def stacked_fixtures():
    out = [scenarios.trolls(n) for n in range(2, 13)]
    out += [scenarios.ideological(n).population for n in (4, 8)]
    out += [scenarios.smallest_theta_upper_bound(F(3, 4))]
    out += [random_stacked(seed) for seed in range(60)]
    return out


def test_c16_engine_cross_validation():
    disagreements = undercuts = witness_misses = runs = 0
    rng = random.Random(16)
    for pop in stacked_fixtures():
        flat = pop.expand()
        windows = [None] + [Window(s.prefs.speech, s.prefs.speech) for s in pop.stacks[:2]]
        for window in windows:
            q = fair_limit_min_quotient(pop, window)
            f = fair_limit_min(flat, window)
            if q.min_size != f.min_size:
                disagreements += 1
            for report in (q, f):
                if exact_liminf(flat, window, report.witness) != report.min_size:
                    witness_misses += 1
    pops = [(p.expand(), None) for p in stacked_fixtures()]
    while runs < 1000:
        pop, window = pops[runs % len(pops)]
        low = fair_limit_min(pop, window).min_size
        if exact_liminf(pop, window, random_fair_schedule(rng, pop.n)) < low:
            undercuts += 1
        runs += 1
    ok = disagreements == 0 and undercuts == 0 and witness_misses == 0
    record(
        16,
        ok,
        f"{disagreements} engine disagreements, {undercuts} undercuts in {runs} random schedules, "
        f"{witness_misses} witness misses",
    )
