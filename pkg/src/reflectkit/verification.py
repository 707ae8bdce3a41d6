"""Numerical predicates for reflection solutions and switch-problem bounds.

Every check evaluates its inequality on a checkpoint set made of all
breakpoints of the paths involved, the event times of a switch solution
and 1000 low-discrepancy points.  Piecewise-linear combinations attain
their extremes at breakpoints, so the set is exhaustive up to jump
bookkeeping; the extra points guard against bookkeeping mistakes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from . import paths as P
from .errors import ContractError
from .paths import DEFAULT_EPS
from .reflection import generalized_inverse

N_QMC = 1000


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one predicate.

    ``worst_violation`` is the largest positive excess over all
    checkpoints (0 when every inequality holds outright) and
    ``witness_time`` is where it occurs.
    """

    passed: bool
    worst_violation: float
    witness_time: float
    check_name: str

    def to_dict(self):
        return {
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "witness_time": self.witness_time,
            "check_name": self.check_name,
        }


def _qmc_points(H, n=N_QMC):
    pts = qmc.Halton(d=1, scramble=False).random(n).ravel()
    return pts * H


def checkpoints(H, *paths, extra=()):
    """Sorted union of breakpoints below ``H``, ``extra`` times, low-discrepancy
    points and ``H`` itself."""
    parts = [p.times for p in paths]
    parts.append(np.asarray(extra, dtype=float))
    parts.append(_qmc_points(H))
    parts.append(np.array([H]))
    c = np.unique(np.concatenate(parts))
    return c[(c >= 0) & (c <= H)]


def _report(name, viol, times, eps):
    viol = np.asarray(viol, dtype=float)
    if viol.size == 0:
        return CheckReport(True, 0.0, 0.0, name)
    k = int(np.argmax(viol))
    worst = float(viol[k]) if viol[k] > 0 else 0.0
    return CheckReport(worst <= eps, worst, float(times[k]), name)


def _combine(name, reports, eps):
    worst = max(reports, key=lambda r: r.worst_violation)
    return CheckReport(
        all(r.passed for r in reports), worst.worst_violation, worst.witness_time, name
    )


def complementarity_excess(y, l, eps):
    """Stieltjes integral of ``1{y > eps}`` against ``dl`` on ``[0, H]``.

    Both paths are linear between merged breakpoints, so the portion of
    each piece where ``y > eps`` is an interval found by one root.  Jumps
    of ``l`` count when ``y > eps`` at the jump time.  Returns the total
    and the time of the largest single contribution.
    """
    c, H = P.merged_times(y, l)
    nxt = np.append(c[1:], H)
    iy, il = y.segment_index(c), l.segment_index(c)
    y0 = y(c)
    sy = y.slopes[iy]
    sl = l.slopes[il]
    length = nxt - c
    with np.errstate(divide="ignore", invalid="ignore"):
        root = c + (eps - y0) / sy
    above = np.where(
        sy == 0,
        np.where(y0 > eps, length, 0.0),
        np.where(
            sy > 0,
            np.clip(nxt - np.maximum(root, c), 0.0, length),
            np.clip(np.minimum(root, nxt) - c, 0.0, length),
        ),
    )
    contrib = np.abs(sl) * above
    jt = l.times[1:]
    jl = l.jumps()
    jump_contrib = np.where(y(jt) > eps, np.abs(jl), 0.0) if jt.size else np.empty(0)
    allc = np.concatenate((contrib, jump_contrib))
    allt = np.concatenate((c, jt))
    if allc.size == 0:
        return 0.0, 0.0
    return float(np.sum(allc)), float(allt[int(np.argmax(allc))])


def check_definition1(x, F, y, l, eps=DEFAULT_EPS):
    """Check that ``(y, l)`` solves the jump-reflection problem for ``(x, F)``.

    Conditions: ``y >= -eps``; ``l`` nondecreasing and starting at
    ``F^{-1}(x(0)_-)``; ``y = x + F(l)`` on the checkpoints; and ``l``
    grows only where ``y <= eps``.
    """
    H = y.horizon
    if l.horizon != H or x.horizon < H:
        raise ContractError(f"incompatible horizons: x {x.horizon}, y {H}, l {l.horizon}")
    c = checkpoints(H, x, y, l)
    yc = y(c)
    reports = []

    # (i) nonnegativity, right values and left limits
    cl = c[c > 0]
    neg = np.concatenate((-yc, -y.left_limit(cl)))
    reports.append(_report("nonnegativity", neg, np.concatenate((c, cl)), eps))

    # (ii) monotone l with the right start
    slope_bad = np.maximum(-l.slopes, 0.0)
    jump_bad = np.maximum(-l.jumps(), 0.0)
    l0 = float(generalized_inverse(F)(max(-float(x.values[0]), 0.0)))
    mono = np.concatenate((slope_bad * (l.seg_ends() - l.times), jump_bad, [abs(l.values[0] - l0)]))
    mono_t = np.concatenate((l.times, l.times[1:], [0.0]))
    reports.append(_report("monotone_l", mono, mono_t, eps))

    # (iii) the defining identity
    lc = l(c)
    if np.any(lc > F.horizon):
        raise ContractError("boundary term runs beyond the regulator horizon")
    resid = np.abs(yc - x(c) - F(lc))
    reports.append(_report("identity", resid, c, eps))

    # (iv) complementarity
    total, where = complementarity_excess(y, l, eps)
    reports.append(_report("complementarity", [total], [where], eps))
    return _combine("def1", reports, eps)


def _switch_points(sol):
    H = sol.horizon
    ev = [t for _, t, _ in sol.events]
    return checkpoints(H, sol.y, sol.tA, sol.tB, extra=ev)


def _scaled(sol, F):
    return P.scale_time(F, sol.rho_scale)


def check_lemma_est1(sol, x, F, eps=DEFAULT_EPS):
    """Upper bound ``F(T_B(t)-) <= m(T_A(t))`` on the checkpoints."""
    Fs = _scaled(sol, F)
    c = _switch_points(sol)
    TA, TB = sol.tA(c), sol.tB(c)
    m = P.running_neg_sup(x)
    lhs = np.where(TB > 0, Fs.left_limit(np.where(TB > 0, TB, Fs.horizon)), Fs(0.0))
    viol = lhs - m(TA)
    return _report("est1", viol, c, eps)


def check_lemma_est2(sol, x, F, delta, eps=DEFAULT_EPS):
    """Lower bound on ``F(T_B(t))`` with the negative-jump and backslide
    corrections."""
    Fs = _scaled(sol, F)
    c = _switch_points(sol)
    TA, TB = sol.tA(c), sol.tB(c)
    m = P.running_neg_sup(x)
    rhs = -delta + m(TA) - P.max_negative_jump_at(x, TA) - P.max_backslide_at(Fs, TB)
    viol = rhs - Fs(TB)
    return _report("est2", viol, c, eps)


def check_switch_identity(sol, x, F, eps=DEFAULT_EPS):
    """``y = x(T_A) + F(T_B)`` and ``T_A + T_B = t`` on the checkpoints."""
    Fs = _scaled(sol, F)
    c = _switch_points(sol)
    TA, TB = sol.tA(c), sol.tB(c)
    scale = max(1.0, float(np.max(np.abs(sol.y.values))))
    r1 = np.abs(sol.y(c) - x(TA) - Fs(TB)) / scale
    r2 = np.abs(TA + TB - c)
    return _combine(
        "switch_identity",
        [_report("y", r1, c, eps), _report("clock", r2, c, eps)],
        eps,
    )
