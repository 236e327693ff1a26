"""Risk-averse newsvendor: closed-form nominal order and robust order versus radius."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._numerics import golden_section
from ..divergences import make_tailored
from ..errors import DomainError, ParamError
from ..models import SampleSet, get_model, rng_for
from ..risk import cvar, empirical_cvar
from ..solver import RobustProblem, solve
from .table import Table

DEFAULT_RADII = (0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class NewsvendorConfig:
    v: float = 8.0
    c: float = 4.0
    s: float = 2.0
    l: float = 4.0
    demand: str = "lognormal(mu=0,sigma=1)"
    alpha: float = 0.95
    radius_grid: tuple = DEFAULT_RADII
    y_grid: tuple = None
    n_samples: int = 10000
    seed: int = 0

    def __post_init__(self):
        if not self.v > self.c > self.s or self.l < 0:
            raise ParamError("need v > c > s and l >= 0")
        if not 0 < self.alpha < 1:
            raise ParamError("alpha must lie in (0, 1)")
        if any(r < 0 for r in self.radius_grid):
            raise ParamError("radii must be non-negative")
        if int(self.n_samples) < 1:
            raise ParamError("n_samples must be positive")

    @property
    def model(self):
        return get_model(self.demand)


def profit(cfg, y, d):
    d = np.asarray(d, dtype=float)
    return (cfg.v * np.minimum(d, y) + cfg.s * np.maximum(y - d, 0.0)
            - cfg.l * np.maximum(d - y, 0.0) - cfg.c * y)


def newsvendor_closed_form(cfg=None):
    """Minimiser of nominal CVaR of the profit loss."""
    cfg = cfg or NewsvendorConfig()
    E, U, V = cfg.c - cfg.s, cfg.v + cfg.l - cfg.c, cfg.v - cfg.c
    if not E + U > 0:
        raise DomainError("E + U must be positive")
    u1 = U * (1.0 - cfg.alpha) / (E + U)
    u2 = (E * cfg.alpha + U) / (E + U)
    if not (0 < u1 < 1 and 0 < u2 < 1):
        raise DomainError(f"quantile levels {u1:g}, {u2:g} leave (0, 1)")
    model = cfg.model
    q1, q2 = float(model.quantile(u1)), float(model.quantile(u2))
    return (E + V) / (E + U) * q1 + (U - V) / (E + U) * q2


def demand_sample(cfg):
    """Stratified draws F^{-1}((i + U_i)/N), one per stratum."""
    n = int(cfg.n_samples)
    u = (np.arange(n) + rng_for(cfg.seed, 0).random(n)) / n
    return np.asarray(cfg.model.quantile(u), dtype=float)


def newsvendor_problem(cfg, r):
    sigma = float(cfg.model.params.get("sigma", 1.0))
    phi2 = make_tailored("gl_cvar", {"sigma": sigma, "p": 2, "d": 2})
    return RobustProblem("ball", cvar(cfg.alpha).phi1, phi2, radius=float(r))


def robust_order_value(cfg, demand, y, r):
    """Robust CVaR of -profit at order quantity y."""
    claims = SampleSet(profit(cfg, y, demand))
    if r == 0:
        return empirical_cvar(cfg.alpha, claims)
    return solve(newsvendor_problem(cfg, r), claims).value


def newsvendor_robust_curve(cfg=None, xtol=1e-4):
    """Golden-section order quantity for each radius on one stratified draw."""
    cfg = cfg or NewsvendorConfig()
    demand = demand_sample(cfg)
    lo, hi = cfg.y_grid if cfg.y_grid is not None else (0.0, float(cfg.model.quantile(0.9999)))
    table = Table(("radius", "y_robust", "value"),
                  meta={"n_samples": cfg.n_samples, "seed": cfg.seed})
    for r in cfg.radius_grid:
        y, val = golden_section(lambda t: robust_order_value(cfg, demand, t, r), lo, hi,
                                xtol=xtol)
        table.add(float(r), float(y), float(val))
    return table
