"""Robust CVaR of a Pareto claim: radius sweep and KL versus polynomial balls."""

from __future__ import annotations

from ..divergences import get_divergence
from ..models import get_model, importance_sample, sample
from ..risk import cvar
from ..solver import RobustProblem, solve
from .table import Table

PARETO = "pareto_neg(alpha=2,xm=1)"
# tail-heavier proposal 1/x^2 on x <= -1
PROPOSAL = "pareto_neg(alpha=1,xm=1)"
EXACT_CVAR = 12.649110640673518
DEFAULT_RADII = (0.0, 0.001, 0.003, 0.005, 0.007, 0.01, 0.03, 0.1, 0.537, 1.0)
DEFAULT_SIZES = tuple(range(500, 6001, 500))


def toy_pareto_cvar(radii=DEFAULT_RADII, N=1000, seed=0, phi2="polynomial(3)", alpha=0.975):
    """Ball-robust CVaR of one Pareto draw for each radius."""
    radii = [float(r) for r in radii]
    if any(r < 0 for r in radii):
        raise ValueError("radii must be non-negative")
    phi1 = cvar(alpha).phi1
    phi2 = get_divergence(phi2)
    data = sample(get_model(PARETO), N, seed)
    table = Table(("radius", "robust_cvar"),
                  meta={"N": N, "seed": seed, "phi2": phi2.label, "exact": EXACT_CVAR})
    for r in radii:
        table.add(r, solve(RobustProblem("ball", phi1, phi2, radius=r), data).value)
    return table


def divergence_comparison(sizes=DEFAULT_SIZES, r=0.02, seed=0, use_importance=False,
                          alpha=0.975):
    """Polynomial(3) and KL ball values on the same draw for each sample size."""
    if not r > 0:
        raise ValueError("radius must be positive")
    phi1 = cvar(alpha).phi1
    model = get_model(PARETO)
    poly = RobustProblem("ball", phi1, get_divergence("polynomial(3)"), radius=r)
    kl = RobustProblem("ball", phi1, get_divergence("kl"), radius=r)
    table = Table(("size", "polynomial", "kl"),
                  meta={"r": r, "seed": seed, "importance": bool(use_importance)})
    for j, n in enumerate(sizes):
        if use_importance:
            data = importance_sample(model, get_model(PROPOSAL), n, seed, stream=j)
        else:
            data = sample(model, n, seed, stream=j)
        table.add(int(n), solve(poly, data).value, solve(kl, data).value)
    return table
