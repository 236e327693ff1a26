"""Nominal (non-robust) risk: optimized certainty equivalents, shortfall, expected utility."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._numerics import integrate_tail, minimize_convex_1d
from ._specstr import bind, parse_call
from .divergences import Divergence, cvar_indicator, eval_conjugate, get_divergence, kl
from .errors import InfeasibleError, NonFiniteError, ParamError
from .models import NominalModel, SampleSet, get_model

__all__ = [
    "RiskSpec",
    "get_risk",
    "weighted_sum",
    "nominal_oce",
    "exact_oce",
    "nominal_shortfall",
    "robust_eu_penalty",
    "empirical_cvar",
]


@dataclass(frozen=True)
class RiskSpec:
    """Risk measure generated by phi1; the utility is u(x) = -phi1*(-x)."""

    kind: str
    phi1: Divergence
    alpha: Optional[float] = None
    gamma: Optional[float] = None

    def utility(self, x):
        return -np.asarray(eval_conjugate(self.phi1, -np.asarray(x, dtype=float)))

    @property
    def label(self):
        if self.kind == "cvar":
            return f"cvar({self.alpha:g})"
        if self.kind == "entropic":
            return f"entropic({self.gamma:g})"
        return f"oce({self.phi1.label})"


def cvar(alpha):
    if not 0 < alpha < 1:
        raise ParamError("cvar: alpha must lie in (0, 1)")
    return RiskSpec("cvar", cvar_indicator(alpha), alpha=float(alpha))


def entropic(gamma):
    if not gamma > 0:
        raise ParamError("entropic: gamma must be positive")
    return RiskSpec("entropic", kl(gamma), gamma=float(gamma))


def get_risk(spec):
    """Parse ``"cvar(0.975)"``, ``"entropic(1)"`` or ``"oce(phi1=kl)"``."""
    if isinstance(spec, RiskSpec):
        return spec
    text = spec.strip()
    if text.lower().startswith("oce"):
        inner = text[text.index("(") + 1:text.rindex(")")].strip()
        if inner.lower().startswith("phi1"):
            inner = inner.split("=", 1)[1].strip()
        return RiskSpec("oce", get_divergence(inner))
    name, args, kwargs = parse_call(text)
    if name == "cvar":
        return cvar(bind(name, args, kwargs, ("alpha",))["alpha"])
    if name == "entropic":
        return entropic(bind(name, args, kwargs, ("gamma",), {"gamma": 1.0})["gamma"])
    raise ParamError(f"unknown risk spec {spec!r}")


def weighted_sum(weights, values):
    """sum w_i v_i over positive weights; +inf if any such v_i is +inf.

    Uses numpy's pairwise summation, so the result does not depend on threading.
    """
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    pos = w > 0
    v = v[pos]
    if v.size and (np.any(np.isnan(v)) or np.any(v == np.inf)):
        return math.inf
    return float(np.sum(w[pos] * v))


def _eta_bracket(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    return -hi - 1.0, -lo + 1.0


def nominal_oce(spec, data, xtol=1e-12):
    """inf_eta  eta + E[phi1*(-X - eta)] on weighted samples."""
    spec = get_risk(spec)
    x, w = data.values, data.weights

    def objective(eta):
        return eta + weighted_sum(w, eval_conjugate(spec.phi1, -x - eta))

    lo, hi = _eta_bracket(x[w > 0])
    eta, val, _ = minimize_convex_1d(objective, lo, hi, xtol=xtol)
    if not math.isfinite(val):
        raise NonFiniteError(f"{spec.label}: objective infinite on every bracket")
    return val


def _model_expectation(model, func, kink=None, zero_above=None):
    if model.is_discrete:
        vals, w = model.atoms
        return weighted_sum(w, func(vals))
    lo, hi = model.support
    if zero_above is not None:
        hi = min(hi, zero_above)
        if hi <= lo:
            return 0.0
    anchor = float(model.quantile(0.5)) if kink is None else float(np.clip(kink, lo, hi))
    width = max(float(model.quantile(0.75) - model.quantile(0.25)), 1e-3)
    reach = max(abs(model.quantile(1e-6) - anchor), abs(model.quantile(1 - 1e-6) - anchor))

    def integrand(t):
        dens = model.density(t)
        vals = np.asarray(func(t), dtype=float)
        return np.where(dens > 0, vals * dens, 0.0)

    res = integrate_tail(integrand, lo, hi, anchor=anchor, width=width, detect_after=reach,
                         rtol=1e-11, atol=1e-14, vectorized=True)
    return res.value


def exact_oce(spec, model, xtol=1e-9):
    """OCE with the expectation computed by quadrature against the model density."""
    spec = get_risk(spec)
    model = get_model(model)
    # phi1* vanishes on s <= 0 for CVaR, so only x < -eta contributes
    flat = spec.kind == "cvar"

    def objective(eta):
        f = lambda t: eval_conjugate(spec.phi1, -t - eta)
        return eta + _model_expectation(model, f, kink=-eta, zero_above=-eta if flat else None)

    lo, hi = float(model.quantile(0.01)), float(model.quantile(0.99))
    lo, hi = min(lo, -hi) - 1.0, max(hi, -lo) + 1.0
    eta, val, _ = minimize_convex_1d(objective, lo, hi, xtol=xtol, grid=17)
    if not math.isfinite(val):
        raise NonFiniteError(f"{spec.label}: objective infinite for {model!r}")
    return val


def empirical_cvar(alpha, data):
    """Weighted empirical CVaR of the loss -X with a fractional boundary atom."""
    loss = -np.asarray(data.values, dtype=float)
    w = np.asarray(data.weights, dtype=float)
    order = np.argsort(-loss, kind="stable")
    loss, w = loss[order], w[order]
    tail = 1.0 - alpha
    cum = np.cumsum(w)
    full = cum <= tail
    taken = w[full].sum()
    total = float(np.dot(w[full], loss[full]))
    if taken < tail:
        j = int(np.argmax(~full))
        total += (tail - taken) * loss[j]
    return total / tail


def nominal_shortfall(spec, data, tol=1e-13):
    """Smallest eta with E[-u(X + eta)] = E[phi1*(-X - eta)] <= 0, by bisection."""
    spec = get_risk(spec)
    x, w = data.values, data.weights

    def excess(eta):
        return weighted_sum(w, eval_conjugate(spec.phi1, -x - eta))

    lo, hi = _eta_bracket(x[w > 0])
    for _ in range(200):
        if excess(hi) <= 0:
            break
        lo, hi = hi, hi + 2.0 * (hi - lo)
    else:
        raise InfeasibleError(f"{spec.label}: no feasible eta found")
    for _ in range(200):
        if excess(lo) > 0:
            break
        lo = lo - 2.0 * (hi - lo)
    else:
        return lo
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= tol * max(1.0, abs(mid)):
            break
        if excess(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi


def robust_eu_penalty(phi1, phi2, data, xtol=1e-13):
    """inf_theta  -theta + E[phi2*(phi1*(-X) + theta)]."""
    phi1, phi2 = get_divergence(phi1), get_divergence(phi2)
    w = data.weights
    a = np.asarray(eval_conjugate(phi1, -data.values), dtype=float)
    if np.any(np.isinf(a[w > 0])):
        raise NonFiniteError("phi1* is infinite at some sample")
    if phi2.identity:
        return weighted_sum(w, a)

    def objective(theta):
        return -theta + weighted_sum(w, eval_conjugate(phi2, a + theta))

    pa = a[w > 0]
    lo, hi = -float(np.max(pa)) - 1.0, -float(np.min(pa)) + 1.0
    theta, val, _ = minimize_convex_1d(objective, lo, hi, xtol=xtol)
    if not math.isfinite(val):
        raise NonFiniteError("robust expected utility objective infinite for every theta")
    return val
