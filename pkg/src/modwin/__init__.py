"""Moderation windows, switching dynamics and community formation on a speech line."""

from .core import (
    EMPTY_WINDOW,
    FULL_WINDOW,
    Direct,
    FromDisutility,
    Population,
    Stack,
    StackedPopulation,
    UserPrefs,
    Window,
    compatible,
    mutually_compatible,
    utility,
    validate,
    willing,
)
from .dynamics import (
    Advance,
    Cyclic,
    NoModeration,
    Phased,
    RoundRobin,
    Scripted,
    SeededRandom,
    Static,
    exact_liminf,
    fair_limit_min,
    is_stable,
    potential,
    simulate,
    step,
)
from .graph import CapExceeded
from .lcc import (
    core_window,
    dynamic_window_one_sided,
    lcc_exact,
    lcc_one_sided,
    lcc_theta_one,
    mutually_compatible_core,
    sample_window,
    sampling_bound,
)
from .policy import IdeologicalPlatform, best_guaranteed_window, best_ideological_window, fair_size
from .quotient import fair_limit_min_quotient

__all__ = [name for name in dir() if not name.startswith("_")]
