"""Convergence studies built on the switch solver and the reflection maps.

Generator specs are plain dicts so that experiment configs can live in
JSON files.  Recognized ``kind`` values:

``polyline``  knots ``t`` and ``x`` (continuous path through them)
``linear``    ``start`` and ``slope``
``identity``  ``F(t) = slope * t`` (``slope`` defaults to 1)
``file``      a path JSON file at ``path``
``rw``        scaled random walk with increment law ``dist``
``cpp``       compound Poisson with rate ``lam``, law ``jump``, drift ``drift``
``stable``    heavy-tailed subordinator walk with index ``beta``
``bm``        Brownian interpolation

Any spec may also carry ``start`` (added to the path) and ``horizon``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import paths as P
from . import simulation as S
from .errors import ContractError, RangeError, ReflectKitError, ZenoError
from .metrics import distance
from .reflection import DelayRate, absorb, delayed_reflection, gen_skorokhod_map
from .switch import SwitchConfig, solve_switch

FLAG_OK = ""
FLAG_HYPOTHESIS = "UNVERIFIED-HYPOTHESIS"
FLAG_ZENO = "ZENO"
FLAG_ERROR = "ERROR"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    """Declarative description of a convergence study.

    Row ``i`` uses gap ``delta_schedule[i]``, regulator time scale
    ``rho_schedule[i]`` and generator scale ``scale_schedule[i]`` (1 when
    omitted).  ``limit_driving`` / ``limit_regulator`` describe the limit
    inputs; when left out the row's own driving path and the regulator
    spec at the row's scale are used (coupled comparison).
    """

    name: str = "experiment"
    driving: dict = field(default_factory=lambda: {"kind": "linear", "start": 1.0, "slope": -1.0})
    regulator: dict = field(default_factory=lambda: {"kind": "identity"})
    delta_schedule: list = field(default_factory=lambda: [0.5, 0.25, 0.125])
    rho_schedule: list = field(default_factory=lambda: [1.0, 1.0, 1.0])
    rho_target: float = 1.0
    horizon: float = 1.0
    metric: str = "uniform"
    replicas: int = 1
    base_seed: int = 0
    scale_schedule: Optional[list] = None
    limit_driving: Optional[dict] = None
    limit_regulator: Optional[dict] = None
    zero_rule: str = "strict"
    workers: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.delta_schedule, dtype=float)
        r = np.asarray(self.rho_schedule, dtype=float)
        if d.size == 0 or d.size != r.size:
            raise ContractError("delta and rho schedules must be non-empty and of equal length")
        if np.any(d < 0) or np.any(np.diff(d) > 0):
            raise ContractError("delta schedule must be nonnegative and nonincreasing")
        if np.any(r <= 0):
            raise ContractError("rho schedule entries must be positive")
        if self.scale_schedule is not None and len(self.scale_schedule) != d.size:
            raise ContractError("scale schedule must match the delta schedule")
        tgt = float(self.rho_target)
        if 0 < tgt < math.inf and abs(r[-1] - tgt) > 0.01 * tgt:
            raise ContractError(f"rho schedule ends at {r[-1]}, not within 1% of target {tgt}")
        if self.replicas < 1:
            raise ContractError("replicas must be at least 1")

    @property
    def delay(self):
        return DelayRate.of(self.rho_target)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = {k: v for k, v in d.items() if k not in known}
        kw = {k: v for k, v in d.items() if k in known}
        if extra:
            kw.setdefault("params", {}).update(extra)
        if isinstance(kw.get("rho_target"), str):
            kw["rho_target"] = float(kw["rho_target"])
        return cls(**kw)


@dataclass
class ConvergenceRow:
    n: int
    delta: float
    rho: float
    distance: float
    metric_kind: str
    runtime_ms: float
    seed: int
    replica: int = 0
    flag: str = FLAG_OK

    FIELDS = ("n", "delta", "rho", "distance", "metric_kind", "runtime_ms", "seed", "replica", "flag")


# ---------------------------------------------------------------------------
# generators


def jump_distribution(spec):
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return S.JumpDistribution.constant(spec.get("value", spec.get("c", 0.0)))
    if kind == "exponential":
        return S.JumpDistribution.exponential(spec["mean"])
    if kind == "pareto":
        return S.JumpDistribution.pareto(spec["beta"], spec.get("scale", 1.0))
    if kind == "two_point":
        return S.JumpDistribution.two_point(spec["a"], spec.get("pa", 0.5), spec["b"])
    raise ContractError(f"unknown jump distribution {kind!r}")


def build_path(spec, n=1, seed=0, stream=S.DRIVING, replica=0, horizon=1.0):
    """Instantiate a generator spec at scale ``n``."""
    kind = spec.get("kind")
    H = float(spec.get("horizon", horizon))
    if kind == "polyline":
        p = P.polyline(spec["t"], spec["x"], spec.get("horizon"))
    elif kind == "linear":
        p = P.linear_path(0.0, spec.get("slope", 0.0), H)
    elif kind == "identity":
        p = P.linear_path(0.0, spec.get("slope", 1.0), H)
    elif kind == "file":
        p = P.load_path(spec["path"])
    elif kind == "rw":
        cfg = S.SimulationConfig(n=n, seed=seed, horizon=H, interpolation=spec.get("interpolation", "step"))
        p = S.random_walk_path(jump_distribution(spec["dist"]), cfg, stream, replica)
    elif kind == "cpp":
        lam = spec.get("lam", 0.0)
        drift = spec.get("drift", 0.0)
        cfg = S.SimulationConfig(n=n, seed=seed, horizon=H, lam=_eval_scaled(lam, n), drift=_eval_scaled(drift, n))
        jump = jump_distribution(_scaled_jump(spec.get("jump", {"kind": "constant", "value": 1.0}), n))
        p = S.compound_poisson_path(jump, cfg, stream, replica)
    elif kind == "stable":
        cfg = S.SimulationConfig(n=n, seed=seed, horizon=H, beta=spec.get("beta", 0.5))
        p = S.stable_subordinator_walk(cfg, stream, replica)
    elif kind == "bm":
        cfg = S.SimulationConfig(n=n, seed=seed, horizon=H)
        p = S.brownian_path(cfg, stream, replica)
    else:
        raise ContractError(f"unknown generator kind {kind!r}")
    start = float(spec.get("start", 0.0))
    return P.affine(p, 1.0, start) if start else p


def _eval_scaled(v, n):
    """Numbers pass through; ``{"coef": c, "power": a, "add": b}`` means ``c n^a + b``."""
    if isinstance(v, dict):
        return v.get("coef", 1.0) * n ** v.get("power", 0.0) + v.get("add", 0.0)
    return float(v)


def _scaled_jump(spec, n):
    return {k: (_eval_scaled(v, n) if isinstance(v, dict) else v) for k, v in spec.items()}


# ---------------------------------------------------------------------------
# limits and hypothesis proxies


def limit_path(x0, F0, rho, T):
    """The limit object for delay rate ``rho`` on ``[0, T]``.

    Returns ``(path, flag)``; the flag reports a failed absorption
    hypothesis for the infinite case.
    """
    if rho.kind == "infinite":
        res = absorb(x0)
        flag = FLAG_OK if res.hypothesis_ok else FLAG_HYPOTHESIS
        return P.restrict(res.path, T), flag
    if rho.kind == "zero":
        return P.restrict(gen_skorokhod_map(x0, F0).y, T), FLAG_OK
    sol = delayed_reflection(x0, F0, rho)
    return P.restrict(sol.y, T), FLAG_OK


def hypothesis_e_holds(x0, F0, eps=P.DEFAULT_EPS):
    """Per-path proxy: no jump level ``F0(alpha-)`` is held by ``m0`` on a flat piece.

    A plateau of ``m0`` at such a level means the times on it are not
    growth points, which the limit theorem excludes.
    """
    j = F0.jumps()
    levels = F0.end_values()[:-1][j > eps]
    if levels.size == 0:
        return True
    m = P.running_neg_sup(x0)
    ends = m.seg_ends()
    flat = (m.slopes == 0) & (ends > m.times)
    held = m.values[flat]
    if held.size == 0:
        return True
    return not np.any(np.abs(held[:, None] - levels[None, :]) <= eps)


# ---------------------------------------------------------------------------
# convergence rows


def _row_task(args):
    cfg, i, r = args
    delta = float(cfg.delta_schedule[i])
    rho = float(cfg.rho_schedule[i])
    n = int(cfg.scale_schedule[i]) if cfg.scale_schedule is not None else 1
    seed = int(cfg.base_seed)
    T = float(cfg.horizon)
    t0 = time.perf_counter()
    flag = FLAG_OK
    try:
        x = build_path(cfg.driving, n, seed, S.DRIVING, r, T)
        F = build_path(cfg.regulator, n, seed, S.REGULATOR, r, T / rho + 1.0)
        x0 = x if cfg.limit_driving is None else build_path(cfg.limit_driving, n, seed, S.DRIVING, r, T)
        F0 = F if cfg.limit_regulator is None else build_path(
            cfg.limit_regulator, n, seed, S.REGULATOR, r, max(T, 1.0) * 10
        )
        scfg = SwitchConfig(
            delta=delta,
            rho_scale=rho,
            horizon=T,
            zero_rule=cfg.zero_rule,
            max_events=int(cfg.params.get("max_events", 10**6)),
        )
        sol = solve_switch(x, F, scfg)
        y0, flag = limit_path(x0, F0, cfg.delay, T)
        if cfg.delay.kind != "infinite" and not hypothesis_e_holds(x0, F0):
            flag = FLAG_HYPOTHESIS
        dist = distance(sol.y, y0, T, cfg.metric).value
    except ZenoError:
        dist, flag = math.nan, FLAG_ZENO
    except ReflectKitError:
        dist, flag = math.nan, FLAG_ERROR
    ms = (time.perf_counter() - t0) * 1e3
    return ConvergenceRow(i + 1, delta, rho, dist, cfg.metric, ms, seed, r, flag)


def _map(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


def run_convergence(cfg):
    """One row per (schedule index, replica) with the distance to the limit."""
    tasks = [(cfg, i, r) for i in range(len(cfg.delta_schedule)) for r in range(cfg.replicas)]
    return _map(_row_task, tasks, cfg.workers)


def loglog_slope(deltas, dists):
    """Least-squares slope of ``log dist`` against ``log delta``."""
    d = np.asarray(deltas, dtype=float)
    y = np.asarray(dists, dtype=float)
    ok = (d > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(d[ok]), np.log(y[ok]), 1)[0])


# ---------------------------------------------------------------------------
# storage processes


STORAGE_CASES = ("zero", "finite", "infinite")


def _storage_rho(case, n, rho_finite):
    if case == "zero":
        return n**-0.5
    if case == "finite":
        return rho_finite
    return n**0.5


def _storage_task(args):
    case, n, r, p = args
    T = p["horizon"]
    mu = p["mu"]
    seed = p["seed"]
    eps = p["eps"]
    rho = _storage_rho(case, n, p["rho"])
    gamma = float(n)
    x = S.compound_poisson_path(
        S.JumpDistribution.exponential(n**-0.5),
        S.SimulationConfig(n=n, seed=seed, horizon=T, lam=float(n), drift=math.sqrt(n) - mu),
        S.DRIVING,
        r,
    )
    # regulator time actually consumed is about l(T) <= max(-x) + overshoot,
    # so start there and extend on demand
    HF = 2.0 * (max(0.0, -float(np.min(x.end_values())), -float(np.min(x.values))) + 1.0)
    while True:
        F = S.compound_poisson_path(
            S.JumpDistribution.exponential(1.0 / gamma),
            S.SimulationConfig(n=n, seed=seed, horizon=HF, lam=gamma),
            S.REGULATOR,
            r,
        )
        try:
            sol = solve_switch(x, F, SwitchConfig(delta=0.0, rho_scale=rho, horizon=T))
            break
        except RangeError as exc:
            HF = max(2.0 * HF, 1.5 * exc.needed / rho)
    occ = P.sublevel_measure(sol.y, eps) / T
    ident = P.identity_path(10.0 * (T + 1.0 + float(np.max(np.abs(x.values)))))
    target = {"zero": DelayRate.zero(), "finite": DelayRate.finite(p["rho"]), "infinite": DelayRate.infinite()}[case]
    y0, _ = limit_path(x, ident, target, T)
    dist = distance(sol.y, y0, T, p["metric"]).value
    predicted = math.nan
    post_sigma = math.nan
    if case == "finite":
        ref = gen_skorokhod_map(x, ident)
        A = P.add(P.identity_path(x.horizon), P.affine(ref.l, p["rho"]))
        Hp = float(P.first_passage(A, 0.0, A.horizon, T, below=False) or A.horizon)
        predicted = p["rho"] * float(ref.l(Hp)) / T
    elif case == "zero":
        predicted = 0.0
    else:
        sigma = P.first_passage(x, 0.0, T, 0.0, below=True)
        if sigma is not None:
            after = sol.y.times >= sigma
            post_sigma = float(np.max(np.abs(np.concatenate((sol.y.values[after], sol.y.end_values()[after], [sol.y(T)])))))
    return {
        "case": case,
        "n": n,
        "replica": r,
        "rho": rho,
        "distance": dist,
        "occupation": occ,
        "predicted_occupation": predicted,
        "post_sigma_sup": post_sigma,
        "events": len(sol.events),
    }


def run_storage_trichotomy(cfg):
    """Storage-process sweep over the three delay regimes.

    Driving input: compound Poisson with rate ``n``, Exp(mean ``n^-1/2``)
    jumps and drift ``sqrt(n) - mu``.  Regulator: compound Poisson with
    rate ``gamma_n = n`` and Exp(mean ``1/n``) jumps, run on the time
    scale ``rho_n`` (``n^-1/2``, fixed ``rho``, ``n^1/2``).  The limit is
    computed on the same driving sample.
    """
    p = {
        "horizon": float(cfg.horizon),
        "mu": float(cfg.params.get("mu", -0.5)),
        "rho": float(cfg.params.get("rho", 1.0)),
        "seed": int(cfg.base_seed),
        "eps": float(cfg.params.get("eps", 1e-9)),
        "metric": cfg.metric,
    }
    ns = [int(v) for v in (cfg.scale_schedule or [100, 400, 1600])]
    tasks = [(c, n, r, p) for c in STORAGE_CASES for n in ns for r in range(cfg.replicas)]
    rows = _map(_storage_task, tasks, cfg.workers)
    summary = {}
    for c in STORAGE_CASES:
        per_n = []
        for n in ns:
            sel = [row for row in rows if row["case"] == c and row["n"] == n]
            per_n.append(
                {
                    "n": n,
                    "rho": sel[0]["rho"],
                    "distance": float(np.mean([s["distance"] for s in sel])),
                    "occupation": float(np.mean([s["occupation"] for s in sel])),
                    "predicted_occupation": float(np.mean([s["predicted_occupation"] for s in sel])),
                    "post_sigma_sup": float(np.nanmax([s["post_sigma_sup"] for s in sel]))
                    if c == "infinite"
                    else math.nan,
                }
            )
        summary[c] = per_n
    return {"rows": rows, "summary": summary}


# ---------------------------------------------------------------------------
# perturbed random walk


def _chain_sample(args):
    r, p = args
    n = p["n"]
    seed = p["seed"]
    xi = jump_distribution(p["xi"])
    x = S.random_walk_path(xi, S.SimulationConfig(n=n, seed=seed, horizon=1.0), S.DRIVING, r)
    if p["regulator"] == "stable":
        b = S.stable_scale(n, p["beta"])
        eta = None
    else:
        b = math.sqrt(n)
        eta = S.JumpDistribution.constant(1.0)
    rho = b / n
    HF = (1.0 + 2.0 / n) / rho
    if eta is None:
        F = S.stable_subordinator_walk(S.SimulationConfig(n=n, seed=seed, horizon=HF, beta=p["beta"]), S.REGULATOR, r)
    else:
        rng = S.make_rng(seed, S.REGULATOR, r)
        N = math.floor(b * HF)
        cum = np.concatenate(([0.0], np.cumsum(eta.sample(rng, N)))) / math.sqrt(n)
        F = P.step_path(np.arange(N + 1) / b, cum, (N + 1) / b)
    sol = solve_switch(x, F, SwitchConfig(delta=0.0, rho_scale=rho, horizon=1.0 + 0.5 / n, zero_rule=p["zero_rule"]))
    return float(sol.y(1.0))


def _limit_sample(args):
    r, p = args
    seed = p["seed"]
    w = S.brownian_path(S.SimulationConfig(n=p["bm_n"], seed=seed, horizon=1.0), S.LIMIT, r)
    m1 = float(P.running_neg_sup(w)(1.0))
    w1 = float(w(1.0))
    if p["regulator"] != "stable" or m1 == 0.0:
        return w1 + m1
    H = 4.0
    while True:
        U = S.stable_subordinator_walk(
            S.SimulationConfig(n=p["limit_n"], seed=seed, horizon=H, beta=p["beta"]), S.LIMIT + 1, r
        )
        if U.end_values()[-1] > m1:
            break
        H *= 2.0
    t_hit = P.first_passage(U, 0.0, U.horizon, m1, below=False, strict=True)
    return w1 + float(U(t_hit))


def run_perturbed_walk(cfg):
    """Chain marginal at ``t = 1`` against the limit ``w + G(m)`` by a two-sample KS test.

    ``G = U o U^{-1}`` for a heavy-tailed subordinator ``U`` (identity for
    the ``"constant"`` regulator, whose limit is classic reflection).
    """
    pr = cfg.params
    p = {
        "n": int(pr.get("n", 10**4)),
        "beta": float(pr.get("beta", 0.5)),
        "seed": int(cfg.base_seed),
        "xi": pr.get("xi", {"kind": "two_point", "a": 1.0, "pa": 0.5, "b": -1.0}),
        "regulator": pr.get("regulator", "stable"),
        "bm_n": int(pr.get("bm_n", 10**4)),
        "limit_n": int(pr.get("limit_n", 10**8)),
        "zero_rule": pr.get("zero_rule", cfg.zero_rule if cfg.zero_rule != "strict" else "closed"),
    }
    tasks = [(r, p) for r in range(cfg.replicas)]
    chain = np.array(_map(_chain_sample, tasks, cfg.workers))
    limit = np.array(_map(_limit_sample, tasks, cfg.workers))
    ks = stats.ks_2samp(chain, limit)
    return {
        "ks_statistic": float(ks.statistic),
        "p_value": float(ks.pvalue),
        "replicas": cfg.replicas,
        "chain": chain,
        "limit": limit,
        "params": p,
    }


def rows_to_dicts(rows):
    return [asdict(r) for r in rows]
