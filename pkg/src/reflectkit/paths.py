"""Right-continuous piecewise-linear paths with jumps on a finite horizon.

A :class:`PiecewisePath` is stored as three parallel arrays ``t``, ``v``,
``s``: on ``[t[i], t[i+1])`` the path equals ``v[i] + s[i] * (u - t[i])``,
and the last segment runs through the horizon ``H`` inclusive.  Every
operation in this module returns a new path built from closed-form
arithmetic on those arrays (crossing times are roots of linear
functions), so nothing here depends on a grid or an iterative solver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, DomainError

DEFAULT_EPS = 1e-9


@dataclass(frozen=True)
class Tolerance:
    """Threshold used by verification predicates and contract checks."""

    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not (0.0 <= self.eps < 1e-3):
            raise ContractError(f"tolerance must lie in [0, 1e-3), got {self.eps}")


@dataclass(frozen=True)
class MonotoneFlags:
    non_decreasing: bool
    strictly_increasing: bool
    continuous: bool


def _normalize(t, v, s):
    # zero-length segments: the later one carries the right-continuous value
    keep = np.ones(t.size, dtype=bool)
    keep[:-1] = t[1:] > t[:-1]
    t, v, s = t[keep], v[keep], s[keep]
    if t.size > 1:
        pred = v[:-1] + s[:-1] * (t[1:] - t[:-1])
        redundant = (s[1:] == s[:-1]) & (v[1:] == pred)
        keep = np.concatenate(([True], ~redundant))
        t, v, s = t[keep], v[keep], s[keep]
    return t, v, s


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


class PiecewisePath:
    """An RCLL function on ``[0, horizon]`` made of linear segments.

    Parameters
    ----------
    times : array_like
        Segment start times; must start at 0 and be nondecreasing.
        Repeated times are allowed on input and collapse to the last entry.
    values : array_like
        Right values ``v[i]`` at each start time.
    slopes : array_like
        Slope of each segment.
    horizon : float
        Right end of the domain; every segment start must lie below it.

    Notes
    -----
    Construction normalizes the segment list (zero-length segments are
    dropped and exactly collinear neighbours merged), and ``==`` compares
    normalized forms.
    """

    __slots__ = ("_t", "_v", "_s", "_horizon")

    def __init__(self, times, values, slopes, horizon, *, normalize=True):
        t = np.asarray(times, dtype=float).ravel()
        v = np.asarray(values, dtype=float).ravel()
        s = np.asarray(slopes, dtype=float).ravel()
        horizon = float(horizon)
        if not (t.size == v.size == s.size) or t.size == 0:
            raise ContractError("times, values and slopes must be non-empty and of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v)) and np.all(np.isfinite(s))):
            raise ContractError("segment data must be finite")
        if not np.isfinite(horizon) or horizon <= 0:
            raise ContractError(f"horizon must be positive and finite, got {horizon}")
        if t[0] != 0.0:
            raise ContractError(f"first segment must start at 0, got {t[0]}")
        if np.any(np.diff(t) < 0):
            raise ContractError("segment start times must be nondecreasing")
        if normalize:
            t, v, s = _normalize(t, v, s)
        elif np.any(np.diff(t) <= 0):
            raise ContractError("segment start times must be strictly increasing")
        if t[-1] >= horizon:
            raise ContractError(f"segment start {t[-1]} is not below the horizon {horizon}")
        self._t = _frozen(t)
        self._v = _frozen(v)
        self._s = _frozen(s)
        self._horizon = horizon

    # -- raw data ---------------------------------------------------------
    @property
    def times(self):
        return self._t

    @property
    def values(self):
        return self._v

    @property
    def slopes(self):
        return self._s

    @property
    def horizon(self):
        return self._horizon

    @property
    def n_segments(self):
        return self._t.size

    def segments(self):
        return list(zip(self._t.tolist(), self._v.tolist(), self._s.tolist()))

    def seg_ends(self):
        """End time of every segment (the next start, or the horizon)."""
        return np.append(self._t[1:], self._horizon)

    def end_values(self):
        """Left limit at each segment end; the last entry is the value at H."""
        return self._v + self._s * (self.seg_ends() - self._t)

    def jumps(self):
        """Jump sizes at ``times[1:]``."""
        return self._v[1:] - self.end_values()[:-1]

    def segment_index(self, t):
        if np.ndim(t) == 0:
            i = int(self._t.searchsorted(t, side="right")) - 1
            return min(max(i, 0), self._t.size - 1)
        idx = np.searchsorted(self._t, t, side="right") - 1
        return np.clip(idx, 0, self._t.size - 1)

    # -- evaluation -------------------------------------------------------
    def __call__(self, t):
        """Unchecked right-continuous evaluation (vectorized)."""
        if np.ndim(t) == 0:
            i = self.segment_index(t)
            return float(self._v[i] + self._s[i] * (t - self._t[i]))
        tt = np.asarray(t, dtype=float)
        idx = self.segment_index(tt)
        out = self._v[idx] + self._s[idx] * (tt - self._t[idx])
        return float(out) if out.ndim == 0 else out

    def _check_domain(self, t, allow_zero=True):
        tt = np.asarray(t, dtype=float)
        lo_ok = tt >= 0 if allow_zero else tt > 0
        if not np.all(lo_ok & (tt <= self._horizon)):
            bound = "[0" if allow_zero else "(0"
            raise DomainError(f"time outside {bound}, {self._horizon}]")
        return tt

    def eval(self, t):
        tt = self._check_domain(t)
        return self(tt)

    def left_limit(self, t):
        tt = self._check_domain(t, allow_zero=False)
        idx = np.clip(np.searchsorted(self._t, tt, side="left") - 1, 0, None)
        out = self._v[idx] + self._s[idx] * (tt - self._t[idx])
        return float(out) if out.ndim == 0 else out

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, PiecewisePath):
            return NotImplemented
        return (
            self._horizon == other._horizon
            and np.array_equal(self._t, other._t)
            and np.array_equal(self._v, other._v)
            and np.array_equal(self._s, other._s)
        )

    __hash__ = None

    def __repr__(self):
        return f"PiecewisePath(n_segments={self.n_segments}, horizon={self._horizon!r})"


# ---------------------------------------------------------------------------
# constructors


def identity_path(horizon):
    return PiecewisePath([0.0], [0.0], [1.0], horizon)


def constant_path(value, horizon):
    return PiecewisePath([0.0], [value], [0.0], horizon)


def linear_path(start, slope, horizon):
    return PiecewisePath([0.0], [start], [slope], horizon)


def polyline(knots_t, knots_x, horizon=None):
    """Continuous path through ``(knots_t[k], knots_x[k])``.

    The last knot time is the horizon unless ``horizon`` extends it, in
    which case the final slope continues.
    """
    kt = np.asarray(knots_t, dtype=float)
    kx = np.asarray(knots_x, dtype=float)
    if kt.size < 2 or np.any(np.diff(kt) <= 0):
        raise ContractError("polyline needs at least two strictly increasing knots")
    slopes = np.diff(kx) / np.diff(kt)
    H = kt[-1] if horizon is None else float(horizon)
    return PiecewisePath(kt[:-1], kx[:-1], slopes, H)


def step_path(times, values, horizon):
    return PiecewisePath(times, values, np.zeros(len(values)), horizon)


# ---------------------------------------------------------------------------
# module-level operations


def evaluate(p, t):
    """Right-continuous value of ``p`` at ``t`` (domain-checked)."""
    return p.eval(t)


def left_limit(p, t):
    """Left limit ``p(t-)`` for ``0 < t <= H``."""
    return p.left_limit(t)


def restrict(p, T):
    """The restriction of ``p`` to ``[0, T]``."""
    if not (0 < T <= p.horizon):
        raise DomainError(f"restriction horizon {T} outside (0, {p.horizon}]")
    if T == p.horizon:
        return p
    keep = p.times < T
    return PiecewisePath(p.times[keep], p.values[keep], p.slopes[keep], T)


def affine(p, scale=1.0, shift=0.0):
    """``scale * p + shift``."""
    return PiecewisePath(p.times, scale * p.values + shift, scale * p.slopes, p.horizon)


def negate(p):
    return affine(p, -1.0)


def merged_times(p, q, horizon=None):
    H = min(p.horizon, q.horizon) if horizon is None else horizon
    c = np.union1d(p.times, q.times)
    return c[c < H], H


def add(p, q):
    """Pointwise sum on the common horizon."""
    c, H = merged_times(p, q)
    ip, iq = p.segment_index(c), q.segment_index(c)
    vals = p(c) + q(c)
    return PiecewisePath(c, vals, p.slopes[ip] + q.slopes[iq], H)


def subtract(p, q):
    return add(p, negate(q))


def scale_time(p, c):
    """The path ``t -> p(t / c)`` on ``[0, c * H]``."""
    c = float(c)
    if not c > 0 or not np.isfinite(c):
        raise ContractError(f"time scale must be positive and finite, got {c}")
    if c == 1.0:
        return p
    return PiecewisePath(p.times * c, p.values, p.slopes / c, p.horizon * c)


def positive_part(p):
    """``max(p, 0)`` with zero crossings inserted exactly."""
    t, v, s = p.times, p.values, p.slopes
    a, b = v, p.end_values()
    n = t.size
    with np.errstate(divide="ignore", invalid="ignore"):
        root = t - a / s
    up = (a < 0) & (b > 0)
    down = (a > 0) & (b < 0)
    keep = (a >= 0) & (b >= 0)

    first_v = np.where(keep | down, a, 0.0)
    first_s = np.where(keep | down, s, 0.0)
    second = up | down
    tt = np.empty(2 * n)
    vv = np.zeros(2 * n)
    ss = np.zeros(2 * n)
    tt[0::2], vv[0::2], ss[0::2] = t, first_v, first_s
    tt[1::2] = np.where(second, root, t)
    ss[1::2] = np.where(up, s, 0.0)
    mask = np.ones(2 * n, dtype=bool)
    mask[1::2] = second
    tt, vv, ss = tt[mask], vv[mask], ss[mask]
    # roots that round onto the horizon carry no length
    inside = tt < p.horizon
    return PiecewisePath(tt[inside], vv[inside], ss[inside], p.horizon)


def _extreme_sequence(p, T=None):
    """Values ``[v0, L1, v1, L2, v2, ...]`` in time order; extremes of a
    piecewise-linear path over any prefix are found among these."""
    ends = p.end_values()
    n = p.n_segments
    seq = np.empty(2 * n - 1)
    seq[0::2] = p.values
    seq[1::2] = ends[:-1]
    return seq


def running_min(p):
    """``r(t) = inf_{s <= t} p(s)`` (left limits included)."""
    t, v, s = p.times, p.values, p.slopes
    n = t.size
    seq = _extreme_sequence(p)
    cm = np.minimum.accumulate(seq)
    before = np.full(n, np.inf)
    before[1:] = cm[1::2]  # running min through the left limit at t[i]

    const = s >= 0
    follow = (~const) & (v <= before)
    partial = (~const) & (v > before)

    first_v = np.where(const, np.minimum(before, v), np.where(follow, v, before))
    first_s = np.where(follow, s, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = t + (before - v) / s
    ends = p.seg_ends()
    second = partial & (cross < ends)

    tt = np.empty(2 * n)
    vv = np.empty(2 * n)
    ss = np.zeros(2 * n)
    tt[0::2], vv[0::2], ss[0::2] = t, first_v, first_s
    tt[1::2] = np.where(second, cross, t)
    vv[1::2] = np.where(second, before, 0.0)
    ss[1::2] = np.where(second, s, 0.0)
    mask = np.ones(2 * n, dtype=bool)
    mask[1::2] = second
    return PiecewisePath(tt[mask], vv[mask], ss[mask], p.horizon)


def running_neg_sup(p):
    """``m(t) = sup_{0 <= s <= t} p(s)_-``, the running maximum of the
    negative part.  Nondecreasing; continuous when ``p`` has no negative
    jumps."""
    return positive_part(negate(running_min(p)))


def _neg_jump_table(p):
    """Breakpoints and prefix maxima of negative jump sizes."""
    neg = np.maximum(-p.jumps(), 0.0)
    return p.times[1:], np.maximum.accumulate(neg) if neg.size else neg


def max_negative_jump(p, T=None):
    """``sup_{0 < s <= T} (p(s-) - p(s))_+``, the largest downward jump."""
    T = p.horizon if T is None else T
    if T > p.horizon:
        raise DomainError(f"T={T} beyond horizon {p.horizon}")
    return float(max_negative_jump_at(p, np.asarray([T]))[0])


def max_negative_jump_at(p, Ts):
    times, pref = _neg_jump_table(p)
    k = np.searchsorted(times, Ts, side="right")
    padded = np.concatenate(([0.0], pref))
    return padded[k]


def max_backslide(p, T=None):
    """``sup_{0 <= s1 <= s2 <= T} (p(s1) - p(s2))``, the largest decrease."""
    T = p.horizon if T is None else T
    if T > p.horizon:
        raise DomainError(f"T={T} beyond horizon {p.horizon}")
    return float(max_backslide_at(p, np.asarray([T]))[0])


def max_backslide_at(p, Ts):
    """Vectorized :func:`max_backslide` over query horizons ``Ts``."""
    seq = _extreme_sequence(p)
    runmax = np.maximum.accumulate(seq)
    drawdown = np.maximum.accumulate(runmax - seq)
    Ts = np.asarray(Ts, dtype=float)
    i = p.segment_index(Ts)
    pos = 2 * i  # position of v[i] in seq
    val = p(Ts)
    out = np.maximum(drawdown[pos], runmax[pos] - val)
    return np.maximum(out, 0.0)


def monotone_flags(p, eps=0.0):
    """Scan slopes and jumps; ``eps`` absorbs rounding in jump sizes."""
    j = p.jumps()
    jumps_ok = bool(np.all(j >= -eps))
    nondec = bool(np.all(p.slopes >= 0)) and jumps_ok
    strict = bool(np.all(p.slopes > 0)) and jumps_ok
    continuous = bool(np.all(np.abs(j) <= eps))
    return MonotoneFlags(nondec, strict, continuous)


def _scale_tol(eps, *paths):
    mag = max(max(float(np.max(np.abs(q.values))), float(np.max(np.abs(q.end_values())))) for q in paths)
    return eps * max(1.0, mag)


def compose_monotone(p, lam):
    """``p o lam`` for a nondecreasing right-continuous ``lam`` (jumps allowed).

    Breakpoints of the result are the breakpoints of ``lam`` together with
    the first times ``lam`` reaches each breakpoint of ``p``.
    """
    lt, lv, ls = lam.times, lam.values, lam.slopes
    lend = lam.end_values()
    lo, hi = lv[0], lend[-1]
    taus = p.times[1:]
    taus = taus[(taus > lo) & (taus <= hi)]
    if taus.size:
        k = np.clip(np.searchsorted(lend, taus, side="left"), 0, lt.size - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            root = lt[k] + (taus - lv[k]) / ls[k]
        pre = np.where(lv[k] >= taus, lt[k], root)
        ok = np.isfinite(pre)
        pre, k, taus = pre[ok], k[ok], taus[ok]
        # nudge each root until lam, evaluated as callers will, has reached tau
        ends = lam.seg_ends()[k]
        for _ in range(8):
            short = (lv[k] + ls[k] * (pre - lt[k]) < taus) & (pre < ends)
            if not short.any():
                break
            pre[short] = np.minimum(np.nextafter(pre[short], np.inf), ends[short])
        cand = np.union1d(lt, pre)
    else:
        cand = lt
    H = lam.horizon
    cand = cand[(cand >= 0) & (cand < H)]
    nxt = np.append(cand[1:], H)
    mid = 0.5 * (cand + nxt)
    j = p.segment_index(lam(mid))
    k = lam.segment_index(cand)
    # lam(cand) lies in p's segment j by construction; rounding in the root
    # can leave it a hair below, which would misplace a jump of p
    lam_c = np.maximum(lv[k] + ls[k] * (cand - lt[k]), p.times[j])
    vals = p.values[j] + p.slopes[j] * (lam_c - p.times[j])
    return PiecewisePath(cand, vals, p.slopes[j] * ls[k], H)


def compose_time_change(p, lam, eps=DEFAULT_EPS):
    """``p o lam`` for a continuous nondecreasing time change with ``lam(0)=0``."""
    tol = _scale_tol(eps, lam)
    flags = monotone_flags(lam, eps=tol)
    if not flags.non_decreasing:
        raise ContractError("time change must be nondecreasing")
    if not flags.continuous:
        raise ContractError("time change must be continuous")
    if abs(lam.values[0]) > tol:
        raise ContractError(f"time change must start at 0, got {lam.values[0]}")
    top = lam.end_values()[-1]
    if top > p.horizon + tol:
        raise ContractError(f"time change reaches {top}, beyond the path horizon {p.horizon}")
    return compose_monotone(p, lam)


def stopped(p, sigma):
    """``t -> p(min(t, sigma))`` on ``[0, H]``."""
    H = p.horizon
    if sigma >= H:
        return p
    if sigma <= 0:
        lam = constant_path(0.0, H)
    else:
        lam = PiecewisePath([0.0, sigma], [0.0, sigma], [1.0, 0.0], H)
    return compose_monotone(p, lam)


def sublevel_measure(p, level, T=None):
    """Lebesgue measure of ``{t <= T : p(t) <= level}``, by exact interval
    accounting on each segment."""
    if T is not None and T < p.horizon:
        p = restrict(p, T)
    t, v, s = p.times, p.values, p.slopes
    ends = p.seg_ends()
    length = ends - t
    with np.errstate(divide="ignore", invalid="ignore"):
        root = t + (level - v) / s
    flat = np.where(v <= level, length, 0.0)
    rising = np.clip(np.minimum(ends, root) - t, 0.0, length)
    falling = np.clip(ends - np.maximum(t, root), 0.0, length)
    meas = np.where(s == 0, flat, np.where(s > 0, rising, falling))
    return float(np.sum(meas))


def first_passage(p, start, stop, level, *, below, strict=False, chunk=32):
    """First time ``u`` in ``[start, stop)`` at which ``p`` enters a half-line.

    With ``below=True`` the target set is ``{p <= level}`` (``{p < level}``
    when ``strict``); with ``below=False`` it is ``{p >= level}`` or
    ``{p > level}``.  The returned time is the infimum of the target set,
    which need not be attained for strict targets.  Returns ``None`` if the
    set does not meet ``[start, stop)``.  Segments are scanned in growing
    chunks so the cost scales with the distance travelled.
    """
    t, v, s = p.times, p.values, p.slopes
    n = t.size
    sign = 1.0 if below else -1.0
    L = sign * level
    i = int(p.segment_index(start))
    H = p.horizon
    while i < n and t[i] < stop:
        j = min(n, i + chunk)
        ti, vi, si = t[i:j], sign * v[i:j], sign * s[i:j]
        nxt = t[i + 1 : j + 1] if j < n else np.append(t[i + 1 : j], H)
        lo = np.maximum(ti, start)
        hi = np.minimum(nxt, stop)
        f_lo = vi + si * (lo - ti)
        f_hi = vi + si * (hi - ti)
        hit_start = (f_lo < L) if strict else (f_lo <= L)
        hit_inside = (si < 0) & (f_hi < L)
        hit = (hit_start | hit_inside) & (lo < hi)
        if np.any(hit):
            k = int(np.argmax(hit))
            if hit_start[k]:
                return float(lo[k])
            r = ti[k] + (L - vi[k]) / si[k]
            return float(min(max(r, lo[k]), hi[k]))
        i = j
        chunk = min(chunk * 2, 8192)
    return None


# ---------------------------------------------------------------------------
# JSON file format: {"horizon": H, "segments": [{"t":..,"v":..,"slope":..}, ...]}


def path_to_dict(p):
    return {
        "horizon": p.horizon,
        "segments": [{"t": t, "v": v, "slope": s} for t, v, s in p.segments()],
    }


def path_from_dict(d):
    try:
        H = float(d["horizon"])
        segs = d["segments"]
        t = [float(seg["t"]) for seg in segs]
        v = [float(seg["v"]) for seg in segs]
        s = [float(seg["slope"]) for seg in segs]
    except (KeyError, TypeError) as exc:
        raise ContractError(f"malformed path document: {exc}") from exc
    if any(b <= a for a, b in zip(t, t[1:])):
        raise ContractError("segment times in a path file must be strictly increasing")
    return PiecewisePath(t, v, s, H)


def load_path(path):
    return path_from_dict(json.loads(Path(path).read_text()))


def save_path(p, path):
    Path(path).write_text(json.dumps(path_to_dict(p), indent=1))
