"""Discrete delta hedging of a Black-Scholes call with transaction costs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..divergences import make_tailored
from ..errors import DomainError, ParamError
from ..models import SampleSet
from ..risk import cvar, empirical_cvar
from ..solver import RobustProblem, solve
from .table import Table

DEFAULT_N_GRID = (10, 25, 50, 100, 200, 400, 800)


@dataclass(frozen=True)
class HedgingConfig:
    mu_S: float = 0.05
    sigma_S: float = 0.3
    r_f: float = 0.01
    T: float = 1.0
    S0: float = 1.0
    K: float = 1.0
    k0: float = 0.0002
    k_prop: float = 0.005
    n_grid: tuple = DEFAULT_N_GRID
    paths: int = 8000
    alpha: float = 0.95
    radius: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma_S > 0 and self.T > 0 and self.S0 > 0 and self.K > 0):
            raise ParamError("sigma_S, T, S0 and K must be positive")
        if int(self.paths) < 1:
            raise ParamError("paths must be at least 1")
        if self.k0 < 0 or self.k_prop < 0:
            raise ParamError("transaction costs must be non-negative")
        if any(int(n) < 1 for n in self.n_grid):
            raise ParamError("hedging frequencies must be positive")


def _d1(S, K, sigma, r_f, tau):
    return (np.log(S / K) + (r_f + 0.5 * sigma * sigma) * tau) / (sigma * np.sqrt(tau))


def bs_delta(S, K, sigma, r_f, tau):
    """Call delta N(d1)."""
    S = np.asarray(S, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(S <= 0) or np.any(tau <= 0) or not (K > 0 and sigma > 0):
        raise DomainError("bs_delta needs S, K, sigma, tau > 0")
    out = stats.norm.cdf(_d1(S, K, sigma, r_f, tau))
    return float(out) if out.ndim == 0 else out


def bs_price(S, K, sigma, r_f, tau):
    d1 = _d1(S, K, sigma, r_f, tau)
    d2 = d1 - sigma * math.sqrt(tau)
    return S * stats.norm.cdf(d1) - K * math.exp(-r_f * tau) * stats.norm.cdf(d2)


@dataclass
class HedgeRun:
    prices: np.ndarray  # (paths, n + 1)
    deltas: np.ndarray  # (paths, n): deltas[:, i] held over [t_i, t_{i+1})
    stock: np.ndarray
    cash: np.ndarray
    payoff: np.ndarray
    initial: float
    meta: dict = field(default_factory=dict)

    @property
    def errors(self):
        return np.abs(self.payoff - self.stock - self.cash)


def _path_normals(seed, n, paths):
    out = np.empty((paths, n))
    for j in range(paths):
        ss = np.random.SeedSequence(seed, spawn_key=(n, j))
        out[j] = np.random.Generator(np.random.PCG64(ss)).standard_normal(n)
    return out


def simulate_hedge(cfg, n):
    n = int(n)
    if n < 1:
        raise ParamError("n must be at least 1")
    dt = cfg.T / n
    z = _path_normals(cfg.seed, n, int(cfg.paths))
    steps = (cfg.mu_S - 0.5 * cfg.sigma_S ** 2) * dt + cfg.sigma_S * math.sqrt(dt) * z
    prices = cfg.S0 * np.exp(np.concatenate([np.zeros((z.shape[0], 1)), np.cumsum(steps, 1)], 1))
    tau = cfg.T - dt * np.arange(n)
    deltas = bs_delta(prices[:, :-1], cfg.K, cfg.sigma_S, cfg.r_f, tau[None, :])
    initial = float(bs_price(cfg.S0, cfg.K, cfg.sigma_S, cfg.r_f, cfg.T))
    growth = math.exp(cfg.r_f * dt)
    cash = initial - deltas[:, 0] * cfg.S0
    for i in range(1, n):
        trade = deltas[:, i] - deltas[:, i - 1]
        s = prices[:, i]
        cash = cash * growth - s * trade - cfg.k0 - cfg.k_prop * np.abs(trade) * s
    cash = cash * growth
    stock = deltas[:, -1] * prices[:, -1]
    payoff = np.maximum(prices[:, -1] - cfg.K, 0.0)
    return HedgeRun(prices, deltas, stock, cash, payoff, initial, {"n": n})


def hedge_paths(cfg, n):
    """Absolute hedging errors |C(S_T) - Stock(T) - Cash(T)| for one frequency."""
    run = simulate_hedge(cfg, n)
    return SampleSet(run.errors, None, cfg.seed, None, {"n": int(n), "kind": "hedging error"})


def hedging_problem(cfg):
    phi2 = make_tailored("gl_cvar", {"sigma": cfg.sigma_S, "p": 2, "d": 2})
    return RobustProblem("ball", cvar(cfg.alpha).phi1, phi2, radius=cfg.radius)


def hedging_study(cfg=None):
    """Nominal and robust CVaR of the hedging error across frequencies."""
    cfg = cfg or HedgingConfig()
    problem = hedging_problem(cfg)
    table = Table(("n", "nominal_cvar", "robust_cvar"),
                  meta={"paths": cfg.paths, "seed": cfg.seed, "radius": cfg.radius})
    for n in cfg.n_grid:
        errs = hedge_paths(cfg, n)
        # the error is a loss; the solver works on claims X = -error
        claims = SampleSet(-errs.values)
        table.add(int(n), empirical_cvar(cfg.alpha, claims), solve(problem, claims).value)
    return table
