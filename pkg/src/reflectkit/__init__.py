"""Reflection maps, the switch problem and convergence harnesses for
piecewise-linear paths with jumps."""

from .errors import (
    ContractError,
    DomainError,
    RangeError,
    ReflectKitError,
    WellPosednessError,
    ZenoError,
)
from .paths import (
    MonotoneFlags,
    PiecewisePath,
    Tolerance,
    compose_time_change,
    constant_path,
    identity_path,
    left_limit,
    linear_path,
    load_path,
    max_backslide,
    max_negative_jump,
    monotone_flags,
    polyline,
    running_neg_sup,
    save_path,
    scale_time,
    step_path,
)
from .reflection import (
    AbsorbResult,
    DelayRate,
    PlateauSet,
    ReflectionSolution,
    absorb,
    compose_F_Finv,
    delayed_reflection,
    gen_skorokhod_map,
    generalized_inverse,
    skorokhod_map,
    sticky_time_change,
)
from .switch import SwitchConfig, SwitchSolution, occupation_measures, solve_switch

__version__ = "0.1.0"
