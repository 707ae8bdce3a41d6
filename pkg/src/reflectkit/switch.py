"""Event-driven solver for the switch problem ``G_delta(x, F)``.

In regime A the output follows the increments of ``x`` and in regime B
those of the (time-scaled) regulator ``F``.  Each path has its own
consumption cursor (``a`` for ``x``, ``b`` for ``F``) and the output clock
is always ``t = a + b``, so ``T_A(t) + T_B(t) = t`` holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import paths as P
from .errors import ContractError, DomainError, RangeError, WellPosednessError, ZenoError
from .paths import PiecewisePath

ENTER_B = "B"
ENTER_A = "A"


@dataclass(frozen=True)
class SwitchConfig:
    """Parameters of one switch-problem instance.

    Parameters
    ----------
    delta : float
        Gap below 0 that triggers regime B.
    rho_scale : float
        The regulator is used as ``F(. / rho_scale)``.
    max_events : int
        Cap on regime changes before a :class:`ZenoError`.
    horizon : float, optional
        Output horizon; defaults to the horizon of ``x``.
    zero_rule : {"strict", "closed"}
        Regime selection when ``delta == 0``: ``"strict"`` selects A iff
        ``y > 0``, ``"closed"`` selects A iff ``y >= 0``.  Ignored for
        ``delta > 0``.
    """

    delta: float = 0.0
    rho_scale: float = 1.0
    max_events: int = 10**6
    horizon: Optional[float] = None
    zero_rule: str = "strict"

    def __post_init__(self):
        if not (self.delta >= 0 and np.isfinite(self.delta)):
            raise ContractError(f"delta must be finite and >= 0, got {self.delta}")
        if not (self.rho_scale > 0 and np.isfinite(self.rho_scale)):
            raise ContractError(f"rho_scale must be positive, got {self.rho_scale}")
        if self.max_events < 1:
            raise ContractError("max_events must be at least 1")
        if self.horizon is not None and not self.horizon > 0:
            raise ContractError(f"horizon must be positive, got {self.horizon}")
        if self.zero_rule not in ("strict", "closed"):
            raise ContractError(f"zero_rule must be 'strict' or 'closed', got {self.zero_rule!r}")


@dataclass(frozen=True)
class SwitchSolution:
    """Output of :func:`solve_switch`.

    ``events`` holds ``(kind, time, value)`` triples where ``kind`` is
    ``"B"`` for an entry into regime B (a time ``rho_k``) and ``"A"`` for
    an entry into regime A (``tau_k``); ``value`` is ``y`` at that time.
    ``periods`` lists ``(start_time, regime, a, b)`` for every regime
    period, including zero-length ones.
    """

    y: PiecewisePath
    tA: PiecewisePath
    tB: PiecewisePath
    events: List[Tuple[str, float, float]]
    consumed_x: float
    consumed_f: float
    rho_scale: float = 1.0
    delta: float = 0.0
    periods: List[Tuple[float, str, float, float]] = field(default_factory=list)

    @property
    def horizon(self):
        return self.y.horizon

    def event_times(self, kind=None):
        return np.array([t for k, t, _ in self.events if kind is None or k == kind])


class _Target:
    """Half-line ``{p <= L}`` / ``{p < L}`` / ``{p >= L}`` / ``{p > L}``."""

    __slots__ = ("below", "strict")

    def __init__(self, below, strict):
        self.below = below
        self.strict = strict

    def holds(self, value, level):
        if self.below:
            return value < level if self.strict else value <= level
        return value > level if self.strict else value >= level


def _passage(p, start, stop, level, target):
    """First entry time into the target set and whether it is attained.

    Looks at ``[start, stop]`` including the closed right end.  Roots of
    continuous crossings are nudged by a few ulps so that a closed target
    really holds at the returned time.
    """
    u = P.first_passage(p, start, stop, level, below=target.below, strict=target.strict)
    if u is None:
        if stop <= p.horizon and target.holds(p(stop), level):
            u = stop
        else:
            return None, False
    val = p(u)
    if target.holds(val, level):
        return u, True
    if target.strict:
        return u, False
    # rounding put the root a hair before the crossing
    for _ in range(8):
        u2 = np.nextafter(u, np.inf)
        if u2 > stop:
            break
        u = u2
        if target.holds(p(u), level):
            return float(u), True
    return float(u), True


def _is_step(F):
    return bool(np.all(F.slopes == 0)) and P.monotone_flags(F).non_decreasing


def solve_switch(x, F, cfg=None):
    """Solve the switch problem for driving path ``x`` and regulator ``F``.

    Parameters
    ----------
    x : PiecewisePath
        Driving path with ``x(0) >= 0``.
    F : PiecewisePath
        Regulator with ``F(0) = 0``; used as ``F(. / cfg.rho_scale)``.
    cfg : SwitchConfig

    Returns
    -------
    SwitchSolution

    Raises
    ------
    RangeError
        A cursor would have to run past the horizon of its path.
    ZenoError
        More than ``cfg.max_events`` regime changes.
    WellPosednessError
        ``delta == 0`` and a regime change is ambiguous at 0.
    """
    cfg = cfg or SwitchConfig()
    if x.values[0] < 0:
        raise ContractError(f"driving path must start nonnegative, got {x.values[0]}")
    if F.values[0] != 0:
        raise ContractError(f"regulator must start at 0, got {F.values[0]}")
    Fs = P.scale_time(F, cfg.rho_scale)
    H = float(x.horizon if cfg.horizon is None else cfg.horizon)
    delta = float(cfg.delta)

    if delta > 0:
        to_b = _Target(below=True, strict=False)
        to_b_level = -delta
        to_a = _Target(below=False, strict=False)
    elif cfg.zero_rule == "strict":
        to_b = _Target(below=True, strict=False)
        to_b_level = 0.0
        to_a = _Target(below=False, strict=True)
    else:
        to_b = _Target(below=True, strict=True)
        to_b_level = 0.0
        to_a = _Target(below=False, strict=False)
    step_regulator = delta == 0 and _is_step(Fs)

    ts, vs, ss = [], [], []
    cur_a, cur_b, is_a = [], [], []
    periods = []
    events = []
    a = 0.0
    b = 0.0
    Fb = 0.0
    xa = float(x.values[0])
    regime = ENTER_A
    t = 0.0
    while True:
        periods.append((t, regime, a, b))
        if regime == ENTER_A:
            stop = H - b
            level = to_b_level - Fb
            u, attained = _passage(x, a, min(stop, x.horizon), level, to_b)
            if u is not None and u >= stop:
                u = None
            if u is None:
                if stop > x.horizon:
                    raise RangeError(
                        f"driving path needed up to {stop}, horizon is {x.horizon}", needed=stop
                    )
                u = stop
            starts, vals, slopes = _segment_slice(x, a, u)
            ts.append(starts + b)
            vs.append(vals + Fb)
            ss.append(slopes)
            cur_a.append(starts)
            cur_b.append(np.full(starts.size, b))
            is_a.append(np.ones(starts.size, dtype=bool))
            if u == stop:
                a = u
                break
            a = u
            xa = float(x(a))
            t = a + b
            yv = xa + Fb
            if delta == 0:
                _check_zero_landing(attained, yv, step_regulator, t)
            regime = ENTER_B
            events.append((ENTER_B, t, yv))
        else:
            stop = H - a
            level = -xa
            u, attained = _passage(Fs, b, min(stop, Fs.horizon), level, to_a)
            if u is not None and u >= stop:
                u = None
            if u is None:
                if stop > Fs.horizon:
                    raise RangeError(
                        f"regulator needed up to {stop} (scaled time), horizon is {Fs.horizon}",
                        needed=stop,
                    )
                u = stop
            starts, vals, slopes = _segment_slice(Fs, b, u)
            ts.append(starts + a)
            vs.append(xa + vals)
            ss.append(slopes)
            cur_a.append(np.full(starts.size, a))
            cur_b.append(starts)
            is_a.append(np.zeros(starts.size, dtype=bool))
            if u == stop:
                b = u
                break
            b = u
            Fb = float(Fs(b))
            t = a + b
            yv = xa + Fb
            if delta == 0:
                _check_zero_landing(attained, yv, step_regulator, t)
            regime = ENTER_A
            events.append((ENTER_A, t, yv))
        if len(events) > cfg.max_events:
            raise ZenoError(f"more than {cfg.max_events} regime changes before t={t}", time=t)
        if t >= H:
            break

    yt = np.concatenate(ts)
    y = PiecewisePath(yt, np.concatenate(vs), np.concatenate(ss), H)
    # the clocks share y's breakpoints so T_A, T_B are exact there
    in_a = np.concatenate(is_a).astype(float)
    # (no collinear merging: evaluation must return the cursor values verbatim)
    keep = np.append(yt[1:] > yt[:-1], True)
    ct, ca, cb, in_a = yt[keep], np.concatenate(cur_a)[keep], np.concatenate(cur_b)[keep], in_a[keep]
    tA = PiecewisePath(ct, ca, in_a, H, normalize=False)
    tB = PiecewisePath(ct, cb, 1.0 - in_a, H, normalize=False)
    return SwitchSolution(
        y=y,
        tA=tA,
        tB=tB,
        events=events,
        consumed_x=a,
        consumed_f=b,
        rho_scale=cfg.rho_scale,
        delta=delta,
        periods=periods,
    )


def _segment_slice(p, lo, hi):
    """Segments of ``p`` restricted to ``[lo, hi)`` (empty if ``hi <= lo``)."""
    if hi <= lo:
        return np.empty(0), np.empty(0), np.empty(0)
    t, v, s = p.times, p.values, p.slopes
    i0 = int(p.segment_index(lo))
    k = max(int(np.searchsorted(t, hi, side="left")), i0 + 1)
    starts = np.concatenate(([lo], t[i0 + 1 : k]))
    vals = np.concatenate(([v[i0] + s[i0] * (lo - t[i0])], v[i0 + 1 : k]))
    return starts, vals, s[i0:k].copy()


def _check_zero_landing(attained, yv, step_regulator, t):
    if not attained:
        raise WellPosednessError(
            f"gap 0: regime change at t={t} is an unattained infimum (y={yv})", time=t
        )
    if not step_regulator and yv == 0.0:
        raise WellPosednessError(f"gap 0: output hits 0 at t={t} with a non-step regulator", time=t)


def occupation_measures(sol, t):
    """``(T_A(t), T_B(t))`` read off the period list."""
    if not (0 <= t <= sol.horizon):
        raise DomainError(f"t={t} outside [0, {sol.horizon}]")
    start, regime, a, b = sol.periods[0]
    for per in sol.periods:
        if per[0] > t:
            break
        start, regime, a, b = per
    run = t - start
    return (a + run, b) if regime == ENTER_A else (a, b + run)
