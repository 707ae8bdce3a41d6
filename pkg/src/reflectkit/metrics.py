"""Distances between piecewise paths: exact uniform and a J1 upper bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import paths as P
from .errors import DomainError
from .paths import PiecewisePath

UNIFORM = "uniform"
J1_UPPER = "j1_upper"


@dataclass(frozen=True)
class DistanceResult:
    value: float
    kind: str
    warp: Optional[PiecewisePath] = None


def _restrict_both(p, q, T):
    T = min(p.horizon, q.horizon) if T is None else float(T)
    if T > p.horizon or T > q.horizon or T <= 0:
        raise DomainError(f"T={T} must lie in (0, min horizon]")
    return P.restrict(p, T), P.restrict(q, T), T


def _sup_abs(d):
    return float(max(np.max(np.abs(d.values)), np.max(np.abs(d.end_values()))))


def uniform_distance(p, q, T=None):
    """Exact ``sup_{t <= T} |p(t) - q(t)|``.

    The difference is piecewise linear between merged breakpoints, so the
    supremum is a right value or a left limit at one of them.
    """
    p, q, T = _restrict_both(p, q, T)
    return DistanceResult(_sup_abs(P.subtract(p, q)), UNIFORM, None)


def _jump_list(p, min_size):
    j = p.jumps()
    t = p.times[1:]
    keep = np.abs(j) > min_size
    return t[keep], j[keep]


def greedy_jump_matching(p, q, window, min_size=0.0):
    """Pairs ``(t_p, t_q)`` matching jumps of ``p`` to jumps of ``q``.

    Jumps of ``p`` are taken largest first; each goes to the unmatched jump
    of ``q`` nearest in time within ``window`` (ties broken by size), and
    pairs that would cross an earlier pair are skipped so a monotone warp
    through all pairs exists.  Pairs are returned in the order they were
    accepted.
    """
    tp, jp = _jump_list(p, min_size)
    tq, jq = _jump_list(q, min_size)
    used = np.zeros(tq.size, dtype=bool)
    pairs = []
    for i in np.argsort(-np.abs(jp), kind="stable"):
        if tq.size == 0:
            break
        gap = np.abs(tq - tp[i])
        ok = (~used) & (gap <= window)
        if not ok.any():
            continue
        cand = np.nonzero(ok)[0]
        order = np.lexsort((np.abs(jq[cand] - jp[i]), gap[cand]))
        for k in cand[order]:
            a, b = tp[i], tq[k]
            if all((a - c) * (b - d) > 0 for c, d in pairs):
                pairs.append((a, b))
                used[k] = True
                break
    return pairs


def _warp_through(pairs, T):
    pts = sorted(pairs, key=lambda ab: ab[1])
    kq = np.array([0.0] + [b for _, b in pts] + [T])
    kp = np.array([0.0] + [a for a, _ in pts] + [T])
    return P.polyline(kq, kp)


def j1_distance_upper(p, q, T=None, window=None, max_candidates=8):
    """Upper bound on the J1 distance from explicit time deformations.

    Each candidate warp ``lam`` is piecewise linear with ``lam(t_q) = t_p``
    on a set of matched jump pairs; its score is
    ``max(sup|lam(t) - t|, sup|p(lam(t)) - q(t)|)``.  The identity, the
    largest-``k`` prefixes of the greedy matching and the full matching
    are tried and the smallest score is returned.
    """
    p, q, T = _restrict_both(p, q, T)
    w = T / 10.0 if window is None else float(window)
    best = DistanceResult(_sup_abs(P.subtract(p, q)), J1_UPPER, P.identity_path(T))
    pairs = greedy_jump_matching(p, q, w)
    sizes = list(range(1, min(len(pairs), max_candidates) + 1))
    if pairs and len(pairs) not in sizes:
        sizes.append(len(pairs))
    for k in sizes:
        lam = _warp_through(pairs[:k], T)
        shift = max(abs(a - b) for a, b in pairs[:k])
        score = max(shift, _sup_abs(P.subtract(P.compose_monotone(p, lam), q)))
        if score < best.value:
            best = DistanceResult(score, J1_UPPER, lam)
    return best


def distance(p, q, T=None, kind=UNIFORM, **kw):
    if kind in (UNIFORM, "Uniform"):
        return uniform_distance(p, q, T)
    if kind in (J1_UPPER, "j1", "J1Upper"):
        return j1_distance_upper(p, q, T, **kw)
    raise ValueError(f"unknown metric {kind!r}")
