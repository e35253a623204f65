"""Engine-wide tunables, grouped in one flat config object.

Distances are meters, angles radians, rates per-second; durations are
counted in interpreter ticks (``tick_hz`` ticks per simulated second).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass
class EngineConfig:
    # interpreter
    tick_hz: int = 30
    retain_ticks: int = 50        # handled attention items demote to working after this
    gc_ticks: int = 200           # working memory unlinked this long is collected
    halo_passes: int = 2          # deduction depth of the speculative halo
    belief_threshold: float = 0.5
    desperation_step: float = 0.02
    desperation_floor: float = 0.1
    explore_exponent: float = 1.0  # gamma in weight = pref**gamma * specificity
    specificity_counts_edges: bool = False
    repl_tick_budget: int = 600
    max_transitions_per_tick: int = 200
    max_chain_depth: int = 32     # expansions nested deeper than this find no candidates

    # robot base
    v_nom: float = 0.10
    v_max: float = 0.25
    drive_ticks: int = 30
    turn_angle: float = math.pi / 2
    turn_ticks: int = 30
    grab_ticks: int = 10
    lift_ticks: int = 10
    lift_step: float = 0.03
    lift_max: float = 0.06
    grasp_range: float = 0.05
    say_ticks_per_char: int = 1
    refractory_ticks: int = 60    # min ticks between proximity alerts
    stall_eps: float = 0.005
    stall_window_ticks: int = 10
    robot_radius: float = 0.08
    sense_max: float = 0.40
    sense_trigger: float = 0.05
    slow_factor: float = 0.5
    quick_factor: float = 1.5


DEFAULT_CONFIG = EngineConfig()
