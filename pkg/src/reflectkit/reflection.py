"""Reflection operators on piecewise paths.

Covers the generalized inverse of a monotone regulator, the plateau map
``G = F o F^{-1}``, the classic Skorokhod map, jump-reflection driven by a
regulator ``F``, the sticky (delayed) time change and absorption at 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import paths as P
from .errors import ContractError, RangeError
from .paths import DEFAULT_EPS, PiecewisePath


@dataclass(frozen=True)
class DelayRate:
    """Delay rate at the boundary: zero, a positive finite value, or infinite."""

    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "finite", "infinite"):
            raise ContractError(f"unknown delay-rate kind {self.kind!r}")
        if self.kind == "finite" and not (self.value > 0 and np.isfinite(self.value)):
            raise ContractError(f"finite delay rate must be positive, got {self.value}")

    @classmethod
    def zero(cls):
        return cls("zero", 0.0)

    @classmethod
    def finite(cls, r):
        return cls("finite", float(r))

    @classmethod
    def infinite(cls):
        return cls("infinite", float("inf"))

    @classmethod
    def of(cls, r):
        """Build from a number: 0 -> zero, inf -> infinite."""
        r = float(r)
        if r == 0:
            return cls.zero()
        if np.isinf(r):
            return cls.infinite()
        return cls.finite(r)

    @property
    def rate(self):
        return self.value


@dataclass(frozen=True)
class PlateauSet:
    """Disjoint open gaps ``(alpha_i, beta_i)`` in the closure of ``F``'s range."""

    intervals: tuple

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def contains(self, y):
        """Whether ``y`` lies in some ``[alpha_i, beta_i)`` (vectorized)."""
        yy = np.asarray(y, dtype=float)
        hit = np.zeros(yy.shape, dtype=bool)
        for a, b in self.intervals:
            hit |= (yy >= a) & (yy < b)
        return bool(hit) if hit.ndim == 0 else hit


@dataclass(frozen=True)
class ReflectionSolution:
    y: PiecewisePath
    l: PiecewisePath
    m: PiecewisePath
    g: PiecewisePath
    time_change: Optional[PiecewisePath] = None


class AbsorbResult(NamedTuple):
    path: PiecewisePath
    sigma: float
    absorbed: bool
    hypothesis_ok: bool


def _require_regulator(F, eps=DEFAULT_EPS):
    flags = P.monotone_flags(F, eps=P._scale_tol(eps, F))
    if not flags.non_decreasing:
        raise ContractError("regulator must be nondecreasing")
    if abs(F.values[0]) > eps:
        raise ContractError(f"regulator must start at 0, got {F.values[0]}")
    return flags


def generalized_inverse(F):
    """Right-continuous inverse ``F^{-1}(y) = inf{x : F(x) > y}`` on ``[0, F(H)]``.

    A jump of ``F`` becomes a flat piece of the inverse and a flat piece of
    ``F`` becomes a jump.  At ``y = F(H)`` the leftmost argument attaining
    ``F(H)`` is returned.
    """
    _require_regulator(F)
    t, v, s = F.times, F.values, F.slopes
    ends = F.end_values()
    top = float(ends[-1])
    if top <= 0:
        raise ContractError("regulator never leaves 0 on its horizon")
    n = t.size
    left = np.concatenate(([v[0]], ends[:-1]))
    jump = np.zeros(n, dtype=bool)
    jump[1:] = v[1:] > left[1:]
    rise = s > 0
    with np.errstate(divide="ignore"):
        inv_slope = np.where(rise, 1.0 / np.where(rise, s, 1.0), 0.0)
    # per original segment: optional flat piece for its jump, then the rising piece
    yy = np.empty(2 * n)
    xx = np.empty(2 * n)
    ss = np.zeros(2 * n)
    yy[0::2], xx[0::2] = left, t
    yy[1::2], xx[1::2], ss[1::2] = v, t, inv_slope
    mask = np.empty(2 * n, dtype=bool)
    mask[0::2], mask[1::2] = jump, rise
    yy, xx, ss = yy[mask], xx[mask], ss[mask]
    # rounding-level downward jumps of F must not reorder the breakpoints
    yy = np.maximum.accumulate(yy)
    keep = yy < top
    return PiecewisePath(yy[keep], xx[keep], ss[keep], top)


def plateau_set(F):
    """The gaps ``R_+ minus closure(F(R_+))`` inside ``[0, F(H)]``."""
    _require_regulator(F)
    j = F.jumps()
    left = F.end_values()[:-1]
    pos = j > 0
    return PlateauSet(tuple(zip(left[pos].tolist(), F.values[1:][pos].tolist())))


def compose_F_Finv(F):
    """``G = F o F^{-1}`` together with its plateau set.

    ``G`` is computed by composing the two paths; it equals the identity
    off the plateaus and ``beta_i`` on each ``[alpha_i, beta_i)``.
    """
    Finv = generalized_inverse(F)
    G = P.compose_monotone(F, Finv)
    return G, plateau_set(F)


def skorokhod_map(x):
    """Classic reflection: ``l = m = sup (x)_-`` and ``y = x + m``."""
    if x.values[0] < 0:
        raise ContractError(f"driving path must start nonnegative, got {x.values[0]}")
    m = P.running_neg_sup(x)
    return ReflectionSolution(y=P.add(x, m), l=m, m=m, g=m)


def gen_skorokhod_map(x, F):
    """Jump-reflection of ``x`` with regulator ``F``.

    Returns ``y = x + F(l)`` with ``l = F^{-1}(m)``; ``F`` must be strictly
    increasing from 0 and either continuous or paired with an ``x`` that
    has no negative jumps.
    """
    if x.values[0] < 0:
        raise ContractError(f"driving path must start nonnegative, got {x.values[0]}")
    flags = _require_regulator(F)
    if not flags.strictly_increasing:
        raise ContractError("regulator must be strictly increasing")
    if not flags.continuous and P.max_negative_jump(x) > 0:
        raise ContractError("regulator has jumps and the driving path has negative jumps")
    m = P.running_neg_sup(x)
    need = float(m.end_values()[-1])
    have = float(F.end_values()[-1])
    if have < need:
        raise RangeError(
            f"regulator reaches only F(H_F)={have}; needs F(H_F) >= {need}", needed=need
        )
    Finv = generalized_inverse(F)
    l = P.compose_monotone(Finv, m)
    g = P.compose_monotone(F, l)
    return ReflectionSolution(y=P.add(x, g), l=l, m=m, g=g)


def _boundary_term(m, F):
    return P.compose_monotone(generalized_inverse(F), m)


def sticky_time_change(m, F, rho):
    """``A(t) = t + rho * F^{-1}(m(t))``; continuous, strictly increasing, ``A(0)=0``."""
    if rho.kind == "infinite":
        raise ContractError("infinite delay is absorption; use absorb()")
    H = m.horizon
    if rho.kind == "zero":
        return P.identity_path(H)
    tol = P._scale_tol(DEFAULT_EPS, m)
    mflags = P.monotone_flags(m, eps=tol)
    if not (mflags.non_decreasing and mflags.continuous):
        raise ContractError("sticky time change needs a continuous nondecreasing m")
    l = _boundary_term(m, F)
    return P.add(P.identity_path(H), P.affine(l, rho.value))


def delayed_reflection(x, F, rho):
    """Sticky jump-reflection: the undelayed solution run on the clock ``A^{-1}``.

    The returned solution holds ``z = y o A^{-1}`` and ``L = l o A^{-1}``
    on ``[0, A(H)]``; ``m`` and ``g`` are time-changed the same way and
    ``time_change`` is ``A``.
    """
    sol = gen_skorokhod_map(x, F)
    if rho.kind == "zero":
        return sol
    if rho.kind == "infinite":
        raise ContractError("infinite delay is absorption; use absorb()")
    A = P.add(P.identity_path(x.horizon), P.affine(sol.l, rho.value))
    Ainv = generalized_inverse(A)

    def warp(q):
        return P.compose_monotone(q, Ainv)

    return ReflectionSolution(y=warp(sol.y), l=warp(sol.l), m=warp(sol.m), g=warp(sol.g), time_change=A)


def _first_zero(p):
    """``inf{t : p(t) = 0}`` over the horizon, or ``inf`` if never."""
    t, v, s = p.times, p.values, p.slopes
    ends = p.seg_ends()
    with np.errstate(divide="ignore", invalid="ignore"):
        root = t - v / s
    inside = (s != 0) & (root > t) & (root < ends)
    last = np.zeros_like(inside)
    last[-1] = (s[-1] != 0) and root[-1] == ends[-1]
    cand = np.where(v == 0, t, np.where(inside | last, root, np.inf))
    return float(np.min(cand))


def absorb(x, eps=DEFAULT_EPS):
    """Stop ``x`` at ``sigma``, its first time at or below 0.

    Also reports whether ``inf{x = 0}`` and ``inf{x < 0}`` agree within
    ``eps``; when ``x`` never reaches 0 the result is unabsorbed with
    ``sigma = H``.
    """
    if x.values[0] < 0:
        raise ContractError(f"driving path must start nonnegative, got {x.values[0]}")
    H = x.horizon
    sigma = P.first_passage(x, 0.0, H, 0.0, below=True)
    if sigma is None and x.end_values()[-1] <= 0:
        sigma = H
        absorbed = True
    else:
        absorbed = sigma is not None
    hit_zero = _first_zero(x)
    below = P.first_passage(x, 0.0, H, 0.0, below=True, strict=True)
    if below is None:
        below = np.inf if x.end_values()[-1] >= 0 else H
    hypothesis_ok = (np.isinf(hit_zero) and np.isinf(below)) or abs(hit_zero - below) <= eps
    if not absorbed:
        return AbsorbResult(x, H, False, bool(hypothesis_ok))
    return AbsorbResult(P.stopped(x, sigma), float(sigma), True, bool(hypothesis_ok))
