"""Is a robust risk measure finite for a given (phi1, phi2, nominal) triple?

``classify`` looks the triple up in asymptotic rule tables for CVaR and
entropic risk; ``numeric_probe`` searches a grid of dual points for one whose
integral converges under tail-doubling quadrature. Only the rule table ever
asserts Infinite: quadrature cannot prove divergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._numerics import integrate_tail
from ._specstr import parse_call
from .divergences import divergence_value, eval_conjugate, get_divergence, perspective_conjugate
from .errors import DomainError, QuadratureError
from .models import get_model

__all__ = [
    "FinitenessVerdict",
    "classify",
    "finiteness_table",
    "numeric_probe",
    "risk_factor_bound_check",
    "moment_content_check",
    "NOMINAL_COLUMNS",
    "DIVERGENCE_ROWS",
]

FINITE, INFINITE, PARAM, UNKNOWN = "Finite", "Infinite", "ParamDependent", "Unknown"
NOMINAL_COLUMNS = ("gaussian", "weibull", "lognormal", "pareto", "student_t")
DIVERGENCE_ROWS = ("kl", "polynomial>1", "polynomial<1")


@dataclass(frozen=True)
class FinitenessVerdict:
    status: str
    witness: Optional[tuple] = None
    rationale: str = ""

    def __post_init__(self):
        if self.witness is not None and self.status != FINITE:
            raise ValueError("a witness implies a Finite verdict")

    @property
    def symbol(self):
        return {FINITE: "<inf", INFINITE: "inf", PARAM: "*", UNKNOWN: "?"}[self.status]


_F, _I, _S = FINITE, INFINITE, PARAM

_TABLES = {
    "cvar": {
        "kl": dict(zip(NOMINAL_COLUMNS, (_F, _S, _I, _I, _I))),
        "polynomial>1": dict(zip(NOMINAL_COLUMNS, (_F, _F, _F, _S, _S))),
        "polynomial<1": dict(zip(NOMINAL_COLUMNS, (_I,) * 5)),
    },
    "entropic": {
        "kl": dict(zip(NOMINAL_COLUMNS, (_I,) * 5)),
        "polynomial>1": dict(zip(NOMINAL_COLUMNS, (_F, _S, _I, _I, _I))),
        "polynomial<1": dict(zip(NOMINAL_COLUMNS, (_I,) * 5)),
    },
}

_WHY = {
    ("cvar", "kl"): "phi2*(phi1*(-x)) grows like exp(|x|/(1-alpha))",
    ("cvar", "polynomial>1"): "phi2*(phi1*(-x)) grows like |x|^(p/(p-1))",
    ("entropic", "kl"): "phi2*(phi1*(-x)) grows like exp(exp(gamma |x|))",
    ("entropic", "polynomial>1"): "phi2*(phi1*(-x)) grows like exp(gamma p/(p-1) |x|)",
    ("cvar", "polynomial<1"): "phi2* is +inf beyond 1/(1-p), reached as x -> -inf",
    ("entropic", "polynomial<1"): "phi2* is +inf beyond 1/(1-p), reached as x -> -inf",
}

_NOMINAL_ALIASES = {
    "normal": "gaussian", "gaussian": "gaussian",
    "weibull": "weibull", "weibull_neg": "weibull",
    "lognormal": "lognormal", "log_normal": "lognormal",
    "pareto": "pareto", "pareto_neg": "pareto",
    "student_t": "student_t", "t": "student_t", "student": "student_t",
}


def _row_for(phi2_family, params):
    text = phi2_family.strip().lower().replace(" ", "")
    if text in ("kl", "kullback-leibler"):
        return "kl", None
    if text in ("polynomial>1", "poly>1"):
        return "polynomial>1", params.get("p")
    if text in ("polynomial<1", "poly<1"):
        return "polynomial<1", params.get("p")
    if text.startswith("polynomial"):
        name, args, kwargs = parse_call(text)
        p = args[0] if args else kwargs.get("p", params.get("p"))
        if p is None:
            return None, None
        p = float(p)
        return ("polynomial>1" if p > 1 else "polynomial<1"), p
    return None, None


def classify(risk, phi2_family, nominal_family, params=None):
    """Rule-table verdict for CVaR or entropic risk under a catalog phi2 and nominal family.

    ``params`` may carry: ``p`` (polynomial degree), ``k`` and ``lambda``
    (Weibull shape/scale), ``alpha0`` (Pareto tail index), ``nu`` (Student t
    degrees of freedom), ``alpha`` (CVaR level), ``gamma`` (entropic
    parameter) and ``form`` ("ball" or "penalty"). Parameter-dependent cells
    resolve when the relevant parameters are given.
    """
    params = dict(params or {})
    risk_name = risk.strip().lower().split("(")[0]
    if risk_name not in _TABLES:
        return FinitenessVerdict(UNKNOWN, rationale=f"unsupported risk {risk!r}")
    row, p = _row_for(phi2_family, params)
    col = _NOMINAL_ALIASES.get(nominal_family.strip().lower().replace("-", "_"))
    if row is None or col is None:
        return FinitenessVerdict(UNKNOWN, rationale=f"unsupported triple ({risk}, {phi2_family}, "
                                                    f"{nominal_family})")
    rule = f"{risk_name}/{row}/{col}"
    status = _TABLES[risk_name][row][col]
    why = _WHY[(risk_name, row)]
    if status != PARAM:
        return FinitenessVerdict(status, rationale=f"{rule}: {why}")
    return _resolve(risk_name, row, col, p, params, rule, why)


def _resolve(risk, row, col, p, params, rule, why):
    k = params.get("k")
    lam_w = params.get("lambda", 1.0)
    if risk == "cvar" and row == "kl" and col == "weibull":
        cond = "k > 1 finite, k < 1 infinite; at k = 1 compare 1/(1-alpha) with 1/lambda"
        if k is None:
            return FinitenessVerdict(PARAM, rationale=f"{rule}: {cond}")
        if k > 1:
            return FinitenessVerdict(FINITE, rationale=f"{rule}: k={k:g} > 1")
        if k < 1:
            return FinitenessVerdict(INFINITE, rationale=f"{rule}: k={k:g} < 1")
        form = params.get("form", "ball")
        note = " (boundary case; the KL row has no p, reading is ambiguous)"
        if form == "ball":
            return FinitenessVerdict(FINITE, rationale=f"{rule}: k=1, ball multiplier can exceed "
                                                       f"lambda/(1-alpha){note}")
        alpha = params.get("alpha")
        if alpha is None:
            return FinitenessVerdict(PARAM, rationale=f"{rule}: k=1 penalty form needs alpha{note}")
        ok = 1.0 / (1.0 - alpha) < 1.0 / lam_w
        return FinitenessVerdict(FINITE if ok else INFINITE,
                                 rationale=f"{rule}: k=1, 1/(1-alpha) {'<' if ok else '>='} "
                                           f"1/lambda{note}")
    if risk == "cvar" and row == "polynomial>1" and col in ("pareto", "student_t"):
        key = "alpha0" if col == "pareto" else "nu"
        tail = params.get(key)
        cond = f"finite iff p/(p-1) - ({key}+1) < -1"
        if p is None or tail is None:
            return FinitenessVerdict(PARAM, rationale=f"{rule}: {cond}")
        expo = p / (p - 1.0) - (tail + 1.0)
        ok = expo < -1.0
        return FinitenessVerdict(FINITE if ok else INFINITE,
                                 rationale=f"{rule}: p/(p-1) - ({key}+1) = {expo:g} "
                                           f"{'<' if ok else '>='} -1")
    if risk == "entropic" and row == "polynomial>1" and col == "weibull":
        cond = "k > 1 finite, k < 1 infinite; at k = 1 finite iff gamma p/(p-1) < 1/lambda"
        if k is None:
            return FinitenessVerdict(PARAM, rationale=f"{rule}: {cond}")
        if k > 1:
            return FinitenessVerdict(FINITE, rationale=f"{rule}: k={k:g} > 1")
        if k < 1:
            return FinitenessVerdict(INFINITE, rationale=f"{rule}: k={k:g} < 1")
        if p is None:
            return FinitenessVerdict(PARAM, rationale=f"{rule}: k=1, {cond}")
        gamma = params.get("gamma", 1.0)
        ok = gamma * p / (p - 1.0) < 1.0 / lam_w
        return FinitenessVerdict(FINITE if ok else INFINITE,
                                 rationale=f"{rule}: k=1, gamma p/(p-1) {'<' if ok else '>='} "
                                           f"1/lambda")
    return FinitenessVerdict(PARAM, rationale=f"{rule}: {why}")


def finiteness_table(risk):
    """Rows x columns of verdict symbols ('<inf', 'inf', '*') without parameters."""
    return {row: {col: classify(risk, row, col).symbol for col in NOMINAL_COLUMNS}
            for row in DIVERGENCE_ROWS}


# ------------------------------------------------------------------ probes


def default_grid(model):
    q50 = abs(float(model.quantile(0.5)))
    q99 = abs(float(model.quantile(0.99)))
    t1s = (0.0, 1.0, -1.0, 5.0, -5.0)
    t2s = tuple(dict.fromkeys((0.0, q50, -q50, q99, -q99)))
    lams = (0.5, 1.0, 5.0, 20.0)
    return [(a, b, c) for c in lams for a in t1s for b in t2s]


def _probe_integral(integrand, model):
    lo, hi = model.support
    anchor = float(model.quantile(0.5))
    width = max(float(model.quantile(0.75) - model.quantile(0.25)), 1e-3)
    reach = max(abs(float(model.quantile(1e-6)) - anchor),
                abs(float(model.quantile(1 - 1e-6)) - anchor))

    def weighted(t):
        dens = model.density(t)
        vals = np.asarray(integrand(t), dtype=float)
        with np.errstate(invalid="ignore"):
            out = vals * dens
        return np.where(dens > 0, out, 0.0)

    return integrate_tail(weighted, lo, hi, anchor=anchor, width=width, detect_after=reach,
                          vectorized=True, rtol=1e-8, atol=1e-12)


def numeric_probe(phi1, phi2, model, grid=None, form="ball"):
    """Search dual points (t1, t2, lam) for a convergent finiteness integral.

    The integral is int lam phi2*((phi1*(t2 - x) + t1)/lam) f0(x) dx (lam is
    ignored and taken as 1 for the penalty form). Returns Finite with the
    first witness found, else Unknown with the divergence diagnostics.
    """
    phi1, phi2 = get_divergence(phi1), get_divergence(phi2)
    model = get_model(model)
    grid = default_grid(model) if grid is None else list(grid)
    notes = []
    seen = set()
    for t1, t2, lam in grid:
        lam = 1.0 if form == "penalty" else lam
        if (t1, t2, lam) in seen:
            continue
        seen.add((t1, t2, lam))

        def integrand(x, t1=t1, t2=t2, lam=lam):
            s = np.asarray(eval_conjugate(phi1, t2 - x), dtype=float) + t1
            return perspective_conjugate(phi2, s, lam)

        res = _probe_integral(integrand, model)
        if not res.divergent and math.isfinite(res.value):
            return FinitenessVerdict(FINITE, witness=(t1, t2, lam),
                                     rationale=f"integral {res.value:.6g} converged")
        notes.append(f"({t1:g},{t2:g},{lam:g}): {res.reason or 'divergent'}")
    return FinitenessVerdict(UNKNOWN, rationale="no convergent grid point; " + "; ".join(notes[:5])
                             + (" ..." if len(notes) > 5 else ""))


def risk_factor_bound_check(phi1, phi2, marginals, C, m, grid=None):
    """Probe E[phi2*(t1 + phi1*(t2 + C(1 + m|Z_i|)))] < inf for every marginal Z_i.

    Finite when one (t1, t2) works for all marginals; Unknown otherwise.
    """
    if not C > 0:
        raise DomainError("C must be positive")
    phi1, phi2 = get_divergence(phi1), get_divergence(phi2)
    models = [get_model(z) for z in marginals]
    if grid is None:
        grid = [(a, b) for a in (0.0, -1.0, 1.0, -5.0) for b in (0.0, -1.0, -5.0, 1.0)]
    notes = []
    for t1, t2 in grid:
        ok = True
        for z in models:
            def integrand(x, t1=t1, t2=t2):
                arg = t2 + C * (1.0 + m * np.abs(x))
                s = np.asarray(eval_conjugate(phi1, arg), dtype=float) + t1
                return np.asarray(eval_conjugate(phi2, s), dtype=float)

            res = _probe_integral(integrand, z)
            if res.divergent or not math.isfinite(res.value):
                ok = False
                notes.append(f"({t1:g},{t2:g}) {z!r}: {res.reason or 'divergent'}")
                break
        if ok:
            return FinitenessVerdict(FINITE, witness=(t1, t2, 1.0),
                                     rationale=f"all {len(models)} marginals integrable")
    return FinitenessVerdict(UNKNOWN, rationale="; ".join(notes[:4]))


def moment_content_check(phi2, model, d, test_density):
    """Inside if I_phi2(test, f0) is finite, Outside if numerically divergent."""
    if not d > 1:
        raise DomainError("moment order d must exceed 1")
    phi2 = get_divergence(phi2)
    model = get_model(model)
    test = test_density if callable(test_density) and not hasattr(test_density, "family") \
        else get_model(test_density)
    try:
        val = divergence_value(phi2, test, model, model.support)
    except QuadratureError:
        return "Unknown"
    return "Inside" if math.isfinite(val) else "Outside"
