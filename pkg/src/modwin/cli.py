"""Command-line front end.

Machine-readable reports go to stdout (or ``--out``); short human summaries
go to stderr.  Exit codes: 0 success, 2 invalid input, 3 engine cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import sys

from . import scenarios
from .competition import (
    CompetitionConfig,
    StackedCompetition,
    multi_fair_limit,
    multi_is_stable,
    multi_simulate,
    validate_competition,
)
from .core import Population, StackedPopulation, Window, format_rational, rational, validate
from .dynamics import Cyclic, RoundRobin, SeededRandom, fair_limit_min, is_stable, simulate
from .extensions import expand_frequencies, lcc_variable_frequency_oracle, robust_report
from .graph import CapExceeded
from .io import (
    InputError,
    canonical_dumps,
    competition_from_json,
    competition_to_json,
    freq_population_from_json,
    parse_json,
    population_from_json,
    population_to_json,
    window_from_json,
    window_to_json,
)
from .lcc import (
    lcc_exact,
    lcc_one_sided,
    lcc_theta_one,
    mutually_compatible_core,
    sample_window,
)
from .policy import IdeologicalPlatform, best_guaranteed_window, best_ideological_window, fair_size
from .quotient import fair_limit_min_quotient

SCENARIO_FLAGS = {
    "n": int,
    "theta": rational,
    "d": rational,
    "b": rational,
    "lam": rational,
    "lam_fine": rational,
    "eps": rational,
    "gamma": rational,
    "M": int,
    "u": int,
}


def _bound(text):
    if text in ("inf", "+inf", "-inf"):
        return text
    try:
        return format_rational(rational(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--input", "-i", help="JSON input file ('-' for stdin)")
    src.add_argument("--scenario", help="built-in scenario name")
    src.add_argument("--variant", choices=["coarse", "fine"], default="coarse",
                     help="which personalization-gap population to use")
    for name, kind in SCENARIO_FLAGS.items():
        src.add_argument(f"--{name.replace('_', '-')}", dest=f"sc_{name}", type=str, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", "-o", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="modwin", description="Moderation windows and switching dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run the switching dynamics")
    p.add_argument("--window", nargs=2, type=_bound, metavar=("LO", "HI"))
    p.add_argument("--schedule", choices=["round-robin", "random", "blocks"], default="round-robin")
    p.add_argument("--blocks", type=int, nargs="+", help="stack order for the blocks schedule")
    p.add_argument("--horizon", type=int, default=100)

    p = sub.add_parser("lcc", parents=[common], help="largest compatible community")
    p.add_argument("--method", choices=["auto", "exact", "theta-one", "one-sided", "core"], default="auto")

    p = sub.add_parser("window-opt", parents=[common], help="best static window")
    p.add_argument("--objective", choices=["size", "ideological"], default="size")
    p.add_argument("--platform-interval", nargs=2, type=_bound, metavar=("LO", "HI"))

    p = sub.add_parser("sample-window", parents=[common], help="core window of a random sample")
    p.add_argument("--m", type=int, required=True)

    p = sub.add_parser("fair-limit", parents=[common], help="guaranteed size under fair schedules")
    p.add_argument("--window", nargs=2, type=_bound, metavar=("LO", "HI"))

    p = sub.add_parser("compete", parents=[common], help="multi-platform dynamics")
    p.add_argument("--mode", choices=["fair-limit", "simulate"], default="fair-limit")
    p.add_argument("--focus", type=int, default=0)
    p.add_argument("--schedule", choices=["round-robin", "random", "blocks"], default="round-robin")
    p.add_argument("--blocks", type=int, nargs="+")
    p.add_argument("--horizon", type=int, default=100)

    p = sub.add_parser("robust", parents=[common], help="guaranteed size after population shocks")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--window", nargs=2, type=_bound, metavar=("LO", "HI"))

    p = sub.add_parser("scenario", parents=[common], help="emit a built-in scenario as JSON")
    p.add_argument("name", choices=sorted(scenarios.GENERATORS))
    p.add_argument("--emit", help="file to write (default stdout)")

    p = sub.add_parser("freq-expand", parents=[common], help="expand speech frequencies into copies")
    p.add_argument("--oracle", action="store_true", help="also compare against the brute-force oracle")
    return parser


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


def _scenario_object(name, args):
    gen = scenarios.GENERATORS.get(name)
    if gen is None:
        raise InputError(f"unknown scenario {name!r}")
    accepted = inspect.signature(gen).parameters
    params = {}
    for flag, kind in SCENARIO_FLAGS.items():
        raw = getattr(args, f"sc_{flag}", None)
        if raw is None:
            continue
        if flag not in accepted:
            raise InputError(f"scenario {name} does not take --{flag.replace('_', '-')}")
        try:
            params[flag] = kind(raw)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"--{flag}: bad value {raw!r}") from None
    if "seed" in accepted:
        params["seed"] = args.seed
    obj = gen(**params)
    if isinstance(obj, scenarios.IdeologicalScenario):
        return obj
    if isinstance(obj, scenarios.PersonalizationScenario):
        return obj.fine if args.variant == "fine" else obj.coarse
    return obj


def _read_json(path):
    if path == "-":
        return parse_json(sys.stdin.read(), "<stdin>")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_json(text, path)


def _source(args):
    if (args.input is None) == (args.scenario is None):
        raise InputError("give exactly one of --input or --scenario")
    if args.scenario is not None:
        return _scenario_object(args.scenario, args)
    return _read_json(args.input)


def _population(args):
    """Returns (population, ideological platform or None)."""
    obj = _source(args)
    platform = None
    if isinstance(obj, scenarios.IdeologicalScenario):
        obj, platform = obj.population, obj.platform
    elif isinstance(obj, dict):
        obj = population_from_json(obj)
    if not isinstance(obj, (Population, StackedPopulation)):
        raise InputError("this command needs a single-platform population")
    problems = validate(obj)
    if problems:
        raise InputError("; ".join(problems))
    return obj, platform


def _competition(args):
    obj = _source(args)
    if isinstance(obj, dict):
        obj = competition_from_json(obj)
    if not isinstance(obj, (CompetitionConfig, StackedCompetition)):
        raise InputError("compete needs a competition config")
    problems = validate_competition(obj)
    if problems:
        raise InputError("; ".join(problems))
    return obj


def _window(pair):
    if pair is None:
        return None
    return window_from_json(list(pair))


def _flat(pop):
    return pop.expand() if isinstance(pop, StackedPopulation) else pop


def _schedule(args, stacks, n):
    if args.schedule == "random":
        return SeededRandom(args.seed)
    if args.schedule == "round-robin":
        return RoundRobin(range(n))
    if stacks is None:
        raise InputError("the blocks schedule needs a stacked input")
    blocks = args.blocks if args.blocks else list(range(len(stacks)))
    if any(not 0 <= b < len(stacks) for b in blocks):
        raise InputError("--blocks mentions an unknown stack")
    return scenarios.block_schedule(stacks, blocks)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(args):
    pop, _ = _population(args)
    stacks = pop.stacks if isinstance(pop, StackedPopulation) else None
    flat = _flat(pop)
    window = _window(args.window)
    schedule = _schedule(args, stacks, flat.n)
    if isinstance(schedule, (RoundRobin, Cyclic)) and flat.n == 0:
        raise InputError("empty population")
    trace = simulate(flat, window, schedule, args.horizon)
    stable_at = next((t for t, s in enumerate(trace.states) if is_stable(s, flat, window)), None)
    summary = f"{args.horizon} steps, final size {trace.sizes[-1]}, " + (
        f"first stable at t={stable_at}" if stable_at is not None else "never stable"
    )
    if args.format == "csv":
        return trace.to_csv(), summary
    report = trace.to_json()
    report["stable_at"] = stable_at
    return canonical_dumps(report), summary


def cmd_lcc(args):
    pop, _ = _population(args)
    flat = _flat(pop)
    method = args.method
    if method == "auto":
        method = "exact" if flat.n <= 20 else "core"
    fn = {
        "exact": lcc_exact,
        "theta-one": lcc_theta_one,
        "one-sided": lcc_one_sided,
        "core": mutually_compatible_core,
    }[method]
    result = fn(flat)
    report = result.to_json()
    if result.members:
        speeches = [flat.users[i].speech for i in result.members]
        report["window"] = window_to_json(Window(min(speeches), max(speeches)))
    return _json_only(args, report), f"{result.method}: size {result.size}"


def cmd_window_opt(args):
    # --d doubles as the ideological platform's penalty
    ideology_d = args.sc_d
    if args.scenario is not None and "d" not in inspect.signature(
        scenarios.GENERATORS.get(args.scenario, lambda: None)
    ).parameters:
        args.sc_d = None
    pop, platform = _population(args)
    if args.objective == "size":
        report = best_guaranteed_window(pop, args.jobs)
    else:
        if args.platform_interval is not None:
            if ideology_d is None:
                raise InputError("--platform-interval needs --d")
            try:
                platform = IdeologicalPlatform(_window(args.platform_interval), rational(ideology_d))
            except (ValueError, ZeroDivisionError) as exc:
                raise InputError(f"--d: {exc}") from None
        if platform is None:
            raise InputError("the ideological objective needs --platform-interval and --d")
        report = best_ideological_window(pop, platform, args.jobs)
    summary = f"best window {report.best_window} with value {format_rational(report.objective_value)}"
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lo", "hi", "value"])
        for w, v in report.per_candidate:
            lo, hi = ("empty", "empty") if w.is_empty else window_to_json(w)
            writer.writerow([lo, hi, format_rational(v)])
        return buf.getvalue(), summary
    return canonical_dumps(report.to_json()), summary


def cmd_sample_window(args):
    pop, _ = _population(args)
    flat = _flat(pop)
    window = sample_window(flat, args.m, args.seed)
    size = fair_size(pop, window)
    report = {"window": window_to_json(window), "fair_size": size, "m": args.m, "seed": args.seed}
    return _json_only(args, report), f"sampled window {window}, guaranteed size {size}"


def cmd_fair_limit(args):
    pop, _ = _population(args)
    window = _window(args.window)
    if isinstance(pop, StackedPopulation):
        report = fair_limit_min_quotient(pop, window)
    else:
        report = fair_limit_min(pop, window)
    out = report.to_json()
    out["window"] = window_to_json(window)
    return _json_only(args, out), f"min size {report.min_size} over {report.num_fair_closed_sccs} fair-closed components"


def cmd_compete(args):
    cfg = _competition(args)
    if not 0 <= args.focus < cfg.k:
        raise InputError("--focus is not a platform index")
    if args.mode == "fair-limit":
        report = multi_fair_limit(cfg, args.focus)
        summary = f"platform {args.focus}: min size {report.min_size}"
        return _json_only(args, report.to_json()), summary
    stacks = cfg.stacks if isinstance(cfg, StackedCompetition) else None
    flat = cfg.expand() if isinstance(cfg, StackedCompetition) else cfg
    schedule = _schedule(args, stacks, flat.n)
    trace = multi_simulate(flat, schedule, args.horizon)
    stable_at = next((t for t, s in enumerate(trace.states) if multi_is_stable(s, flat)), None)
    summary = "never stable" if stable_at is None else f"first stable at t={stable_at}"
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "actor"] + [f"size_{j}" for j in range(flat.k)])
        for (t, actor, state) in trace.steps:
            writer.writerow([t, actor] + [sum(1 for x in state if x == j) for j in range(flat.k)])
        return buf.getvalue(), summary
    report = trace.to_json()
    report["stable_at"] = stable_at
    return canonical_dumps(report), summary


def cmd_robust(args):
    pop, _ = _population(args)
    report = robust_report(_flat(pop), _window(args.window), args.k, args.jobs)
    out = report.to_json()
    out["k"] = args.k
    out["window"] = window_to_json(_window(args.window))
    return _json_only(args, out), f"robust size {report.size} over {len(report.per_shock)} shocks"


def cmd_scenario(args):
    args.scenario = args.name
    obj = _scenario_object(args.name, args)
    if isinstance(obj, scenarios.IdeologicalScenario):
        obj = obj.population
    if isinstance(obj, (CompetitionConfig, StackedCompetition)):
        data = competition_to_json(obj)
    else:
        data = population_to_json(obj)
    text = canonical_dumps(data)
    if args.emit:
        args.out = args.emit
    return text, f"scenario {args.name}: {obj.n} users"


def cmd_freq_expand(args):
    if args.input is None:
        raise InputError("freq-expand needs --input")
    fp = freq_population_from_json(_read_json(args.input))
    pop = expand_frequencies(fp)
    data = population_to_json(pop)
    summary = f"{len(fp.users)} users expanded to {pop.n} copies"
    if args.oracle:
        oracle = lcc_variable_frequency_oracle(fp)
        expanded = lcc_exact(pop).size
        data = {"population": data, "oracle_size": oracle, "expanded_lcc_size": expanded}
        summary += f"; oracle {oracle}, expanded LCC {expanded}"
    return canonical_dumps(data), summary


def _json_only(args, data):
    if args.format != "json":
        raise InputError(f"{args.command} only writes JSON")
    return canonical_dumps(data)


COMMANDS = {
    "simulate": cmd_simulate,
    "lcc": cmd_lcc,
    "window-opt": cmd_window_opt,
    "sample-window": cmd_sample_window,
    "fair-limit": cmd_fair_limit,
    "compete": cmd_compete,
    "robust": cmd_robust,
    "scenario": cmd_scenario,
    "freq-expand": cmd_freq_expand,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, summary = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapExceeded as exc:
        print(f"engine cap exceeded: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
