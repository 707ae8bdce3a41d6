"""Seeded generators returning :class:`PiecewisePath` samples.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence`` with a
spawn key ``(stream, replica)``.  Driving and regulating processes use
different streams so they are independent for the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import paths as P
from .errors import ContractError

DRIVING = 0
REGULATOR = 1
LIMIT = 2


def make_rng(seed, stream=DRIVING, replica=0):
    """Independent generator for ``(seed, stream, replica)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(replica)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class JumpDistribution:
    """Law of i.i.d. increments.

    ``kind`` is one of ``"constant"`` (``a``), ``"exponential"`` (mean
    ``a``), ``"pareto"`` (index ``a`` in (0, 1), scale ``b``: tail
    ``P(X > x) = (x / b)^(-a)``) or ``"two_point"`` (value ``a`` with
    probability ``p``, else ``b``).
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in ("constant", "exponential", "pareto", "two_point"):
            raise ContractError(f"unknown jump distribution {self.kind!r}")
        if self.kind == "exponential" and not self.a > 0:
            raise ContractError("exponential mean must be positive")
        if self.kind == "pareto" and not (0 < self.a < 1 and self.b > 0):
            raise ContractError(f"pareto needs index in (0, 1) and scale > 0, got {self.a}, {self.b}")
        if self.kind == "two_point" and not (0 <= self.p <= 1):
            raise ContractError("two-point probability must lie in [0, 1]")

    @classmethod
    def constant(cls, c):
        return cls("constant", float(c))

    @classmethod
    def exponential(cls, mean):
        return cls("exponential", float(mean))

    @classmethod
    def pareto(cls, beta, scale=1.0):
        return cls("pareto", float(beta), float(scale))

    @classmethod
    def two_point(cls, a, pa, b):
        return cls("two_point", float(a), float(b), float(pa))

    def sample(self, rng, size):
        if self.kind == "constant":
            return np.full(size, self.a)
        if self.kind == "exponential":
            return rng.exponential(self.a, size)
        if self.kind == "pareto":
            u = 1.0 - rng.random(size)  # in (0, 1]
            return self.b * u ** (-1.0 / self.a)
        return np.where(rng.random(size) < self.p, self.a, self.b)

    @property
    def mean(self):
        if self.kind in ("constant", "exponential"):
            return self.a
        if self.kind == "pareto":
            return math.inf
        return self.p * self.a + (1 - self.p) * self.b

    @property
    def variance(self):
        if self.kind == "constant":
            return 0.0
        if self.kind == "exponential":
            return self.a**2
        if self.kind == "pareto":
            return math.inf
        return self.p * (1 - self.p) * (self.a - self.b) ** 2

    @property
    def nonnegative(self):
        if self.kind in ("exponential", "pareto"):
            return True
        if self.kind == "constant":
            return self.a >= 0
        return min(self.a, self.b) >= 0


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 1
    seed: int = 0
    horizon: float = 1.0
    lam: float = 0.0
    drift: float = 0.0
    beta: float = 0.5
    interpolation: str = "step"

    def __post_init__(self):
        if self.n < 1:
            raise ContractError("n must be at least 1")
        if not self.horizon > 0:
            raise ContractError("horizon must be positive")
        if self.lam < 0:
            raise ContractError("Poisson rate must be nonnegative")
        if self.interpolation not in ("step", "linear"):
            raise ContractError("interpolation must be 'step' or 'linear'")


def _walk(cum, dt, horizon, linear):
    """Path through ``cum[k]`` at ``k * dt``; ``cum[0]`` is the start value."""
    N = cum.size - 1
    times = np.arange(N + 1) * dt
    if linear:
        return P.polyline(times, cum)
    # the final step sits strictly inside the extended horizon
    return P.step_path(times, cum, max(horizon, (N + 1) * dt))


def random_walk_path(dist, cfg, stream=DRIVING, replica=0):
    """``t -> S(floor(n t)) / sqrt(n)`` on at least ``[0, horizon]``.

    The step version covers ``[0, (N + 1) / n]`` with ``N = floor(n H)``
    so the value at ``H`` includes every step up to ``H``; the linear
    version interpolates knots up to ``ceil(n H) / n``.
    """
    rng = make_rng(cfg.seed, stream, replica)
    n = cfg.n
    linear = cfg.interpolation == "linear"
    N = math.ceil(n * cfg.horizon) if linear else math.floor(n * cfg.horizon + 1e-12)
    steps = dist.sample(rng, max(N, 1))
    cum = np.concatenate(([0.0], np.cumsum(steps))) / math.sqrt(n)
    return _walk(cum, 1.0 / n, cfg.horizon, linear)


def compound_poisson_path(jump, cfg, stream=DRIVING, replica=0):
    """``sum_{k <= N(t)} J_k - drift * t`` with ``N`` a rate-``lam`` Poisson process."""
    rng = make_rng(cfg.seed, stream, replica)
    H = cfg.horizon
    count = rng.poisson(cfg.lam * H) if cfg.lam > 0 else 0
    arrivals = np.sort(rng.uniform(0.0, H, count))
    arrivals = arrivals[arrivals > 0]
    sizes = jump.sample(rng, arrivals.size)
    t = np.concatenate(([0.0], arrivals))
    v = np.concatenate(([0.0], np.cumsum(sizes))) - cfg.drift * t
    return P.PiecewisePath(t, v, np.full(t.size, -float(cfg.drift)), H)


def stable_scale(n, beta):
    """``b(n) = n^(beta/2)``: time scale of the heavy-tailed walk."""
    return float(n) ** (beta / 2.0)


def stable_subordinator_walk(cfg, stream=REGULATOR, replica=0, scale=1.0):
    """``t -> S_eta(floor(b t)) / sqrt(n)`` with Pareto(``beta``) summands.

    Nondecreasing step path starting at 0; its horizon is extended to
    ``(N + 1) / b`` with ``N = floor(b H)``.
    """
    if not (0 < cfg.beta < 1):
        raise ContractError(f"beta must lie in (0, 1), got {cfg.beta}")
    rng = make_rng(cfg.seed, stream, replica)
    b = stable_scale(cfg.n, cfg.beta)
    N = math.floor(b * cfg.horizon + 1e-12)
    eta = JumpDistribution.pareto(cfg.beta, scale).sample(rng, max(N, 1))
    cum = np.concatenate(([0.0], np.cumsum(eta))) / math.sqrt(cfg.n)
    return _walk(cum, 1.0 / b, cfg.horizon, False)


def stable_laplace_constant(beta):
    """``c`` in ``E exp(-lam U(t)) = exp(-c t lam^beta)`` for the unit Pareto walk."""
    return math.gamma(1.0 - beta)


def brownian_path(cfg, stream=DRIVING, replica=0):
    """Linear interpolation of a Gaussian walk with variance ``1/n`` per step."""
    rng = make_rng(cfg.seed, stream, replica)
    n = cfg.n
    N = max(math.ceil(n * cfg.horizon - 1e-12), 1)
    inc = rng.standard_normal(N) / math.sqrt(n)
    cum = np.concatenate(([0.0], np.cumsum(inc)))
    return P.polyline(np.arange(N + 1) / n, cum)
