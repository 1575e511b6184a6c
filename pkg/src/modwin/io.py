"""JSON loading and canonical dumping for populations and competition configs."""

from __future__ import annotations

import json

from .competition import CompetitionConfig, CompetitorStack, Platform, StackedCompetition
from .core import (
    EMPTY_WINDOW,
    INF,
    Direct,
    FromDisutility,
    Population,
    Stack,
    StackedPopulation,
    UserPrefs,
    Window,
    format_rational,
    rational,
)
from .extensions import FreqPopulation, FreqUser


class InputError(ValueError):
    """Malformed or invalid input; the CLI maps it to exit code 2."""


def parse_json(text: str, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _num(value, what):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise InputError(f"{what}: expected an integer or \"num/den\" string, got {value!r}")
    try:
        return rational(value)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{what}: not a rational: {value!r}") from None


def _bound(value, what):
    if value in ("inf", "+inf"):
        return INF
    if value == "-inf":
        return -INF
    return _num(value, what)


def window_from_json(value, what="window"):
    if value is None:
        return None
    if value == "empty":
        return EMPTY_WINDOW
    if not isinstance(value, list) or len(value) != 2:
        raise InputError(f"{what}: expected [lo, hi], \"empty\" or null")
    w = Window(_bound(value[0], what), _bound(value[1], what))
    if w.is_empty:
        raise InputError(f"{what}: lo exceeds hi (use \"empty\" for the empty window)")
    return w


def window_to_json(window):
    if window is None:
        return None
    if window.is_empty:
        return "empty"
    return [format_rational(window.lo), format_rational(window.hi)]


def prefs_to_json(u: UserPrefs) -> dict:
    out = {"l": format_rational(u.left), "p": format_rational(u.speech), "r": format_rational(u.right)}
    if isinstance(u.threshold, Direct):
        out["theta"] = format_rational(u.threshold.theta)
    else:
        out["b"] = format_rational(u.threshold.b)
        out["lambda"] = format_rational(u.threshold.lam)
    return out


def prefs_from_json(d, what="user") -> UserPrefs:
    if not isinstance(d, dict):
        raise InputError(f"{what}: expected an object")
    for key in ("l", "p", "r"):
        if key not in d:
            raise InputError(f"{what}: missing {key!r}")
    if "theta" in d:
        if "b" in d or "lambda" in d:
            raise InputError(f"{what}: give either theta or b/lambda, not both")
        threshold = Direct(_num(d["theta"], f"{what}.theta"))
    elif "b" in d and "lambda" in d:
        threshold = FromDisutility(_num(d["b"], f"{what}.b"), _num(d["lambda"], f"{what}.lambda"))
    else:
        raise InputError(f"{what}: needs theta or both b and lambda")
    return UserPrefs(
        _num(d["l"], f"{what}.l"), _num(d["r"], f"{what}.r"), _num(d["p"], f"{what}.p"), threshold
    )


def _count(value, what):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise InputError(f"{what}: expected a non-negative integer")
    return value


# ---------------------------------------------------------------------------
# Populations
# ---------------------------------------------------------------------------


def population_to_json(pop) -> dict:
    if isinstance(pop, StackedPopulation):
        stacks = []
        for s in pop.stacks:
            d = prefs_to_json(s.prefs)
            d["count"] = s.count
            d["initial_on"] = s.initial_on
            stacks.append(d)
        return {"stacks": stacks}
    return {
        "users": [prefs_to_json(u) for u in pop.users],
        "initial_adopters": sorted(pop.initial_adopters),
    }


def population_from_json(data):
    if not isinstance(data, dict):
        raise InputError("population: expected an object")
    if "stacks" in data:
        stacks = []
        for k, d in enumerate(data["stacks"]):
            what = f"stacks[{k}]"
            prefs = prefs_from_json(d, what)
            count = _count(d.get("count"), f"{what}.count")
            on = _count(d.get("initial_on", 0), f"{what}.initial_on")
            if on > count:
                raise InputError(f"{what}: initial_on exceeds count")
            stacks.append(Stack(prefs, count, on))
        return StackedPopulation(stacks)
    if "users" not in data:
        raise InputError("population: needs \"users\" or \"stacks\"")
    users = [prefs_from_json(d, f"users[{k}]") for k, d in enumerate(data["users"])]
    adopters = data.get("initial_adopters", [])
    if not isinstance(adopters, list):
        raise InputError("initial_adopters: expected a list")
    for a in adopters:
        if isinstance(a, bool) or not isinstance(a, int) or not 0 <= a < len(users):
            raise InputError(f"initial_adopters: {a!r} is not a user id")
    return Population(users, adopters)


def load_population(text, source="<input>"):
    return population_from_json(parse_json(text, source))


def dump_population(pop) -> str:
    return canonical_dumps(population_to_json(pop))


# ---------------------------------------------------------------------------
# Competition
# ---------------------------------------------------------------------------


def _platform_to_json(p: Platform) -> dict:
    out = {"window": window_to_json(p.window)}
    if isinstance(p.lam, tuple):
        out["lambda"] = [format_rational(x) for x in p.lam]
    elif p.lam is not None:
        out["lambda"] = format_rational(p.lam)
    return out


def _platform_from_json(d, k) -> Platform:
    what = f"platforms[{k}]"
    if not isinstance(d, dict):
        raise InputError(f"{what}: expected an object")
    window = window_from_json(d.get("window"), f"{what}.window")
    lam = d.get("lambda")
    if isinstance(lam, list):
        lam = tuple(_num(x, f"{what}.lambda") for x in lam)
    elif lam is not None:
        lam = _num(lam, f"{what}.lambda")
    return Platform(window if window is not None else Window(), lam)


def _bandwidth_to_json(value):
    return "inf" if value == INF else format_rational(value)


def _bandwidth_from_json(value, what):
    if value in ("inf", None):
        return INF
    return _num(value, what)


def competition_to_json(cfg) -> dict:
    out = {
        "platforms": [_platform_to_json(p) for p in cfg.platforms],
        "normalize": cfg.normalize,
    }
    if isinstance(cfg, StackedCompetition):
        stacks = []
        for s in cfg.stacks:
            d = prefs_to_json(s.prefs)
            d["count"] = s.count
            d["bandwidth"] = _bandwidth_to_json(s.bandwidth)
            d["initial"] = list(s.initial)
            stacks.append(d)
        out["stacks"] = stacks
        return out
    out["users"] = [prefs_to_json(u) for u in cfg.users]
    out["bandwidths"] = [_bandwidth_to_json(b) for b in cfg.bandwidths]
    out["initial"] = list(cfg.initial)
    return out


def competition_from_json(data):
    if not isinstance(data, dict):
        raise InputError("competition: expected an object")
    if "platforms" not in data or not isinstance(data["platforms"], list) or not data["platforms"]:
        raise InputError("competition: needs a non-empty \"platforms\" list")
    platforms = [_platform_from_json(d, k) for k, d in enumerate(data["platforms"])]
    normalize = data.get("normalize", True)
    if not isinstance(normalize, bool):
        raise InputError("normalize: expected true or false")
    if "stacks" in data:
        stacks = []
        for k, d in enumerate(data["stacks"]):
            what = f"stacks[{k}]"
            initial = d.get("initial", [])
            if not isinstance(initial, list):
                raise InputError(f"{what}.initial: expected a list of counts per platform")
            stacks.append(
                CompetitorStack(
                    prefs_from_json(d, what),
                    _count(d.get("count"), f"{what}.count"),
                    _bandwidth_from_json(d.get("bandwidth"), f"{what}.bandwidth"),
                    tuple(_count(c, f"{what}.initial") for c in initial),
                )
            )
        return StackedCompetition(stacks, platforms, normalize)
    if "users" not in data:
        raise InputError("competition: needs \"users\" or \"stacks\"")
    users = [prefs_from_json(d, f"users[{k}]") for k, d in enumerate(data["users"])]
    bands = data.get("bandwidths")
    if bands is not None:
        if not isinstance(bands, list) or len(bands) != len(users):
            raise InputError("bandwidths: expected one entry per user")
        bands = [_bandwidth_from_json(b, f"bandwidths[{k}]") for k, b in enumerate(bands)]
    initial = data.get("initial")
    if initial is None:
        # the single-platform schema: adopters start on platform 0
        adopters = set(data.get("initial_adopters", []))
        initial = [0 if i in adopters else None for i in range(len(users))]
    if not isinstance(initial, list) or len(initial) != len(users):
        raise InputError("initial: expected one platform index (or null) per user")
    for k, loc in enumerate(initial):
        if loc is not None and (isinstance(loc, bool) or not isinstance(loc, int)):
            raise InputError(f"initial[{k}]: expected a platform index or null")
    return CompetitionConfig(users, platforms, initial, bands, normalize)


def load_competition(text, source="<input>"):
    return competition_from_json(parse_json(text, source))


def dump_competition(cfg) -> str:
    return canonical_dumps(competition_to_json(cfg))


# ---------------------------------------------------------------------------
# Frequencies
# ---------------------------------------------------------------------------


def freq_population_from_json(data) -> FreqPopulation:
    if not isinstance(data, dict) or "users" not in data:
        raise InputError("frequency population: needs \"users\"")
    users = []
    for k, d in enumerate(data["users"]):
        f = d.get("f") if isinstance(d, dict) else None
        if isinstance(f, bool) or not isinstance(f, int) or f < 1:
            raise InputError(f"users[{k}].f: expected a positive integer")
        users.append(FreqUser(prefs_from_json(d, f"users[{k}]"), f))
    return FreqPopulation(users)


def freq_population_to_json(fp: FreqPopulation) -> dict:
    users = []
    for u in fp.users:
        d = prefs_to_json(u.prefs)
        d["f"] = u.f
        users.append(d)
    return {"users": users}
