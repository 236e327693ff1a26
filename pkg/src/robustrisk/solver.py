"""Finite-dimensional duals of composite robust risk measures.

Forms and their dual objectives on weighted samples (X_i, w_i):

* ``penalty``: inf -t1 - t2 + sum w phi2*(phi1*(t2 - X) + t1)
* ``ball``: inf -t1 - t2 + lam r + sum w lam phi2*((phi1*(t2 - X) + t1) / lam)
* ``globalized``: three nested conjugates, variables (t1, t2, t3, lam)
* ``shortfall-ball``: inf { t2 : sum w eta phi2*((phi1*(-t2 - X) + t1)/eta) <= t1 - eta r }
* ``shortfall-penalty``: inf { t2 : sum w phi2*(t1 + phi1*(-X - t2)) <= t1 }
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize

from ._numerics import minimize_convex_1d
from .divergences import (
    Divergence,
    eval_conjugate,
    eval_conjugate_deriv,
    eval_phi,
    get_divergence,
    perspective_conjugate,
)
from .ellipsoid import ellipsoid_minimize
from .errors import (
    DegenerateError,
    FallbackWarning,
    InfeasibleError,
    IterationLimit,
    NonFiniteError,
    ParamError,
)
from .models import SampleSet
from .risk import RiskSpec, nominal_oce, nominal_shortfall, weighted_sum

__all__ = [
    "RobustProblem",
    "DualSolution",
    "SearchBox",
    "SolverOptions",
    "dual_objective",
    "solve",
    "compactness_bounds",
    "worst_case_density",
    "primal_value",
    "discrete_divergence",
    "brute_force_primal",
]

FORMS = ("penalty", "ball", "globalized", "shortfall-ball", "shortfall-penalty")
SAFE_LIMIT = 1e250


@dataclass(frozen=True)
class RobustProblem:
    form: str
    phi1: Divergence
    phi2: Divergence
    phi3: Optional[Divergence] = None
    radius: Optional[float] = None

    def __post_init__(self):
        form = self.form.replace("_", "-")
        if form not in FORMS:
            raise ParamError(f"unknown form {self.form!r}")
        object.__setattr__(self, "form", form)
        for name in ("phi1", "phi2", "phi3"):
            val = getattr(self, name)
            if isinstance(val, str):
                object.__setattr__(self, name, get_divergence(val))
        needs_radius = form in ("ball", "globalized", "shortfall-ball")
        if needs_radius != (self.radius is not None):
            raise ParamError(f"{form}: radius {'required' if needs_radius else 'not allowed'}")
        if self.radius is not None and not self.radius >= 0:
            raise ParamError("radius must be non-negative")
        if (form == "globalized") != (self.phi3 is not None):
            raise ParamError("phi3 is required exactly for the globalized form")

    @property
    def has_lambda(self):
        return self.form in ("ball", "globalized", "shortfall-ball")

    @property
    def dim(self):
        return {"penalty": 2, "ball": 3, "globalized": 4,
                "shortfall-ball": 3, "shortfall-penalty": 2}[self.form]


@dataclass
class SearchBox:
    lower: np.ndarray
    upper: np.ndarray
    lambda_max: float = math.nan
    fallback: bool = False

    def contains(self, point):
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))


@dataclass
class DualSolution:
    """theta = (t1, t2[, t3]); ``lam`` is lambda (eta for shortfall) or None."""

    theta: np.ndarray
    lam: Optional[float]
    value: float
    iterations: int
    certified_gap: float
    worst_case: Optional[tuple] = None
    branch: str = "ellipsoid"
    box: Optional[SearchBox] = None

    @property
    def point(self):
        if self.lam is None:
            return np.asarray(self.theta, dtype=float)
        return np.append(self.theta, self.lam)

    def as_record(self):
        rec = {f"theta{j + 1}": float(v) for j, v in enumerate(self.theta)}
        rec.update({"lambda": float("nan") if self.lam is None else float(self.lam),
                    "value": self.value, "iterations": self.iterations,
                    "gap": self.certified_gap, "branch": self.branch})
        return rec


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-7
    max_iter: int = 200_000
    lambda_floor: float = 1e-10
    box_pad: float = 2.0
    bisection_tol: float = 1e-9
    max_bisection: int = 200


# ------------------------------------------------------------------ helpers


def _safe_cap(phi):
    """Largest s (up to 1e250 scale) keeping phi*(s) below 1e250 and inside dom(phi*)."""
    cache = getattr(phi, "_cap_cache", None)
    if cache is not None:
        return cache
    upper = phi.conj_dom_upper
    if math.isfinite(upper):
        hi = upper - 1e-9 * max(1.0, abs(upper))
        if eval_conjugate(phi, hi) <= SAFE_LIMIT:
            cap = hi
            object.__setattr__(phi, "_cap_cache", cap)
            return cap
    lo, hi = 0.0, 1.0
    while hi < 1e250 and eval_conjugate(phi, hi) <= SAFE_LIMIT:
        lo, hi = hi, hi * 2.0
        if math.isfinite(upper) and hi >= upper:
            hi = upper
            break
    if hi >= 1e250:
        cap = 1e250
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if eval_conjugate(phi, mid) <= SAFE_LIMIT and mid < upper:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        cap = lo
    object.__setattr__(phi, "_cap_cache", cap)
    return cap


def _active(data):
    w = data.weights
    pos = w > 0
    return data.values[pos], w[pos]


def _deriv(phi, s):
    return np.asarray(eval_conjugate_deriv(phi, np.minimum(s, _safe_cap(phi))), dtype=float)


def _conj(phi, s):
    return np.asarray(eval_conjugate(phi, s), dtype=float)


# --------------------------------------------------------------- objectives


def _oracle_penalty(problem, x, w):
    phi1, phi2 = problem.phi1, problem.phi2
    cap1, cap2 = _safe_cap(phi1), _safe_cap(phi2)

    def oracle(p):
        t1, t2 = p
        t = t2 - x
        i = int(np.argmax(t))
        if t[i] > cap1:
            return math.inf, None, (t[i] - cap1, np.array([0.0, 1.0]))
        b = _conj(phi1, t)
        s = b + t1
        j = int(np.argmax(s))
        if s[j] > cap2:
            d1 = float(_deriv(phi1, t[j]))
            return math.inf, None, (s[j] - cap2, np.array([1.0, d1]))
        v = _conj(phi2, s)
        d2 = _deriv(phi2, s)
        d1 = _deriv(phi1, t)
        val = -t1 - t2 + float(np.sum(w * v))
        grad = np.array([-1.0 + np.sum(w * d2), -1.0 + np.sum(w * d2 * d1)])
        return val, grad, None

    return oracle


def _oracle_ball(problem, x, w):
    phi1, phi2, r = problem.phi1, problem.phi2, problem.radius
    cap1, cap2 = _safe_cap(phi1), _safe_cap(phi2)

    def oracle(p):
        t1, t2, lam = p
        if lam <= 0:
            return math.inf, None, (-lam + 1e-300, np.array([0.0, 0.0, -1.0]))
        t = t2 - x
        i = int(np.argmax(t))
        if t[i] > cap1:
            return math.inf, None, (t[i] - cap1, np.array([0.0, 1.0, 0.0]))
        b = _conj(phi1, t)
        s = b + t1
        j = int(np.argmax(s - cap2 * lam))
        if s[j] > cap2 * lam:
            d1 = float(_deriv(phi1, t[j]))
            return math.inf, None, (s[j] - cap2 * lam, np.array([1.0, d1, -cap2]))
        a = s / lam
        v = _conj(phi2, a)
        d2 = _deriv(phi2, a)
        d1 = _deriv(phi1, t)
        val = -t1 - t2 + lam * r + lam * float(np.sum(w * v))
        if not math.isfinite(val):
            return math.inf, None, (1.0, np.array([1.0, float(d1[j]), -cap2]))
        grad = np.array([
            -1.0 + np.sum(w * d2),
            -1.0 + np.sum(w * d2 * d1),
            r + np.sum(w * (v - a * d2)),
        ])
        return val, grad, None

    return oracle


def _oracle_global(problem, x, w):
    phi1, phi2, phi3, r = problem.phi1, problem.phi2, problem.phi3, problem.radius
    cap1, cap2, cap3 = _safe_cap(phi1), _safe_cap(phi2), _safe_cap(phi3)

    def oracle(p):
        t1, t2, t3, lam = p
        if lam <= 0:
            return math.inf, None, (-lam + 1e-300, np.array([0.0, 0.0, 0.0, -1.0]))
        t = t3 - x
        i = int(np.argmax(t))
        if t[i] > cap1:
            return math.inf, None, (t[i] - cap1, np.array([0.0, 0.0, 1.0, 0.0]))
        b = _conj(phi1, t)
        u = b + t2
        j = int(np.argmax(u))
        if u[j] > cap2:
            d1 = float(_deriv(phi1, t[j]))
            return math.inf, None, (u[j] - cap2, np.array([0.0, 1.0, d1, 0.0]))
        a = _conj(phi2, u)
        s = a + t1
        m = int(np.argmax(s - cap3 * lam))
        if s[m] > cap3 * lam:
            d1 = float(_deriv(phi1, t[m]))
            d2 = float(_deriv(phi2, u[m]))
            return math.inf, None, (s[m] - cap3 * lam, np.array([1.0, d2, d2 * d1, -cap3]))
        c = s / lam
        v = _conj(phi3, c)
        d3 = _deriv(phi3, c)
        d2 = _deriv(phi2, u)
        d1 = _deriv(phi1, t)
        val = -t1 - t2 - t3 + lam * r + lam * float(np.sum(w * v))
        if not math.isfinite(val):
            return math.inf, None, (1.0, np.array([1.0, float(d2[m]), float(d2[m] * d1[m]), -cap3]))
        grad = np.array([
            -1.0 + np.sum(w * d3),
            -1.0 + np.sum(w * d3 * d2),
            -1.0 + np.sum(w * d3 * d2 * d1),
            r + np.sum(w * (v - c * d3)),
        ])
        return val, grad, None

    return oracle


def dual_objective(problem, data, point):
    """Dual objective and one subgradient at ``point``.

    ``point`` is (t1, t2) for penalty, (t1, t2, lam) for ball,
    (t1, t2, t3, lam) for globalized. Returns ``(value, subgradient)``; when
    the value is +inf the second entry is a separating cut ``(h, g)``. The
    ball/globalized objectives at lam = 0 follow 0 phi*(s/0) = 0 (s <= 0),
    +inf (s > 0).
    """
    x, w = _active(data)
    p = np.asarray(point, dtype=float)
    if problem.form in ("ball", "globalized") and p[-1] == 0:
        return _lambda_zero_value(problem, x, w, p), None
    oracle = _oracle_for(problem, x, w)
    val, grad, cut = oracle(p)
    if math.isfinite(val):
        return val, grad
    return math.inf, cut


def _lambda_zero_value(problem, x, w, p):
    if problem.form == "ball":
        t1, t2 = p[0], p[1]
        s = _conj(problem.phi1, t2 - x) + t1
        return -t1 - t2 if np.all(s <= 0) else math.inf
    t1, t2, t3 = p[0], p[1], p[2]
    s = _conj(problem.phi2, _conj(problem.phi1, t3 - x) + t2) + t1
    return -t1 - t2 - t3 if np.all(s <= 0) else math.inf


def _oracle_for(problem, x, w):
    if problem.form == "penalty":
        return _oracle_penalty(problem, x, w)
    if problem.form == "ball":
        return _oracle_ball(problem, x, w)
    if problem.form == "globalized":
        return _oracle_global(problem, x, w)
    raise ParamError(f"{problem.form} has no single dual objective")


# --------------------------------------------------------------- search box


def _interval(points, phi, const_for, K):
    """Interval of z where the linear minorant (q - 1) z - const(q) stays <= K, q in points."""
    x0, y0 = points
    lo = (const_for(x0, phi) + K) / (x0 - 1.0)
    hi = (const_for(y0, phi) + K) / (y0 - 1.0)
    return lo, hi


def _pad(lo, hi, factor, floor_width=1.0):
    mid = 0.5 * (lo + hi)
    half = max(0.5 * (hi - lo), 0.5 * floor_width) * factor
    return mid - half, mid + half


def compactness_bounds(problem, data, opts=None):
    """Search box guaranteed to contain a dual minimiser.

    Built from linear minorants of the conjugates at two points x0 < 1 < y0
    with finite divergence value, around the always-finite reference point
    (t1, t2, lam) = (0, min X, 1). Falls back to a +-1e4 * scale box (with a
    FallbackWarning) when the divergences lack such points.
    """
    opts = opts or SolverOptions()
    x, w = _active(data)
    ex = float(np.sum(w * x))
    xmin = float(np.min(x))
    scale = max(1.0, float(np.max(np.abs(x))))
    form = problem.form
    r = problem.radius or 0.0
    fp1, fp2 = problem.phi1.finite_points, problem.phi2.finite_points
    fp3 = problem.phi3.finite_points if problem.phi3 is not None else (0.5, 2.0)

    def phi_at(phi, q):
        return float(eval_phi(phi, q))

    if form == "penalty":
        K = -xmin + weighted_sum(w, _conj(problem.phi2, _conj(problem.phi1, xmin - x)))
    elif form == "ball":
        K = -xmin + r + weighted_sum(w, _conj(problem.phi2, _conj(problem.phi1, xmin - x)))
    elif form == "globalized":
        K = -xmin + r + weighted_sum(
            w, _conj(problem.phi3, _conj(problem.phi2, _conj(problem.phi1, xmin - x))))
    else:
        raise ParamError(f"{form}: box is built inside the shortfall routine")

    lam_max = math.nan
    if problem.has_lambda:
        # the lambda = 0 branch already attains -min X, so larger lambda cannot help
        lam_max = (min(K, -xmin) + ex) / r if r > 0 else math.inf
    usable = fp1 is not None and fp2 is not None and fp3 is not None and math.isfinite(K)
    if usable and problem.has_lambda and not math.isfinite(lam_max):
        usable = False
    if not usable:
        warnings.warn("divergence lacks finite points x0 < 1 < y0; using default box",
                      FallbackWarning, stacklevel=2)
        big = 1e4 * scale
        lower = [-big] * (problem.dim - (1 if problem.has_lambda else 0))
        upper = [big] * len(lower)
        if problem.has_lambda:
            lam_top = lam_max if math.isfinite(lam_max) else big
            lower.append(opts.lambda_floor)
            upper.append(max(opts.box_pad * lam_top, 10 * opts.lambda_floor))
        return SearchBox(np.array(lower), np.array(upper), lam_max, fallback=True)

    lam_l = lam_max if problem.has_lambda else 1.0
    # outermost theta (acting on X through phi1)
    lo_o, hi_o = _interval(fp1, problem.phi1, lambda q, d: phi_at(d, q) + q * ex, K)
    L = max(abs(lo_o), abs(hi_o))
    if form == "globalized":
        lo_m, hi_m = _interval(fp2, problem.phi2,
                               lambda q, d: (q + 1.0) * L + q * ex + phi_at(d, q), K)
        Lm = max(abs(lo_m), abs(hi_m))
        lo_i, hi_i = _interval(fp3, problem.phi3,
                               lambda q, d: (q + 1.0) * (L + Lm) + q * ex + lam_l * phi_at(d, q), K)
        ranges = [(lo_i, hi_i), (lo_m, hi_m), (lo_o, hi_o)]
    else:
        lo_i, hi_i = _interval(fp2, problem.phi2,
                               lambda q, d: (q + 1.0) * L + q * ex + lam_l * phi_at(d, q), K)
        ranges = [(lo_i, hi_i), (lo_o, hi_o)]
    lower, upper = [], []
    for lo, hi in ranges:
        a, b = _pad(min(lo, hi), max(lo, hi), opts.box_pad)
        lower.append(a)
        upper.append(b)
    if problem.has_lambda:
        lower.append(opts.lambda_floor)
        upper.append(max(opts.box_pad * lam_max, 10 * opts.lambda_floor))
    return SearchBox(np.array(lower), np.array(upper), lam_max)


# ------------------------------------------------------------------- solve


def _nominal_limit(problem, data, opts):
    """r = 0: the ball is {P0}; the value is the nominal OCE (lambda -> inf)."""
    x, w = _active(data)

    def objective(eta):
        return eta + weighted_sum(w, _conj(problem.phi1, -x - eta))

    lo, hi = -float(np.max(x)) - 1.0, -float(np.min(x)) + 1.0
    eta, val, _ = minimize_convex_1d(objective, lo, hi, xtol=1e-14)
    if not math.isfinite(val):
        raise NonFiniteError("nominal objective infinite")
    return DualSolution(np.array([0.0, -eta]), math.inf, val, 0, 0.0, branch="nominal-limit")


def solve(problem, data, opts=None, with_worst_case=False):
    """Minimise the dual of ``problem`` on ``data`` by the ellipsoid method.

    For ball/globalized forms the lambda = 0 branch (value -min X) is compared
    with the ellipsoid optimum over lambda >= lambda_floor and the smaller is
    returned. Raises NonFiniteError when no finite dual point exists and
    IterationLimit (carrying the best point) when the cap is hit before the
    certified gap falls below ``opts.tol``.
    """
    opts = opts or SolverOptions()
    if problem.form == "shortfall-ball":
        return _solve_shortfall_ball(problem, data, opts)
    if problem.form == "shortfall-penalty":
        return _solve_shortfall_penalty(problem, data, opts)
    if problem.form == "penalty" and problem.phi2.identity:
        # phi2* = identity: t1 drops out and the penalty is the nominal OCE
        sol = _nominal_limit(problem, data, opts)
        sol.lam, sol.branch = None, "nominal"
        return sol
    if problem.form == "ball" and problem.radius == 0:
        sol = _nominal_limit(problem, data, opts)
        if with_worst_case:
            sol.worst_case = worst_case_density(problem, data, sol)
        return sol

    x, w = _active(data)
    box = compactness_bounds(problem, data, opts)
    res = ellipsoid_minimize(_oracle_for(problem, x, w), box.lower, box.upper,
                             tol=opts.tol, max_iter=opts.max_iter)
    zero = None
    if problem.has_lambda:
        zval = -float(np.min(x))
        zero = DualSolution(_lambda_zero_theta(problem, x), 0.0, zval, 0, 0.0,
                            branch="lambda-zero", box=box)
    if res.x is None:
        if zero is not None:
            return zero
        raise NonFiniteError(
            f"{problem.form}: dual objective is +inf on the whole search box; "
            "the finiteness integral fails for every dual point")
    lam = float(res.x[-1]) if problem.has_lambda else None
    theta = res.x[:-1] if problem.has_lambda else res.x
    sol = DualSolution(np.array(theta), lam, float(res.value), res.iterations, float(res.gap),
                       box=box)
    if zero is not None and zero.value < sol.value:
        return zero
    if not res.converged and res.iterations >= opts.max_iter:
        raise IterationLimit(f"{problem.form}: gap {res.gap:.3g} after {res.iterations} iterations",
                             best=sol)
    if with_worst_case:
        try:
            sol.worst_case = worst_case_density(problem, data, sol)
        except DegenerateError:
            sol.worst_case = None
    return sol


def _lambda_zero_theta(problem, x):
    xmin = float(np.min(x))
    if problem.form == "ball":
        # t2 = min X gives phi1*(t2 - X) <= phi1*(0); t1 absorbs it
        t2 = xmin
        t1 = -float(eval_conjugate(problem.phi1, 0.0))
        return np.array([t1, t2])
    t3 = xmin
    u = float(eval_conjugate(problem.phi1, 0.0))
    t2 = -u
    t1 = -float(eval_conjugate(problem.phi2, 0.0))
    return np.array([t1, t2, t3])


# ---------------------------------------------------------------- shortfall


def _bisect_t2(feasible, x, opts):
    hi = -float(np.min(x))
    lo = -float(np.max(x)) - 1.0
    step = hi - lo + 1.0
    found = None
    for _ in range(opts.max_bisection):
        ok, info = feasible(lo)
        if not ok:
            break
        found = (lo, info)
        hi = lo
        lo = lo - step
        step *= 2.0
    else:
        raise InfeasibleError("shortfall bracket never became infeasible")
    ok, info = feasible(hi)
    if not ok:
        raise InfeasibleError("upper end of the shortfall bracket is infeasible")
    best = (hi, info)
    iters = 0
    for iters in range(1, opts.max_bisection + 1):
        if hi - lo <= opts.bisection_tol * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        ok, info = feasible(mid)
        if ok:
            hi, best = mid, (mid, info)
        else:
            lo = mid
    return best[0], best[1], iters, hi - lo


def _solve_shortfall_penalty(problem, data, opts):
    x, w = _active(data)
    phi1, phi2 = problem.phi1, problem.phi2
    if problem.phi2.identity:
        val = nominal_shortfall(RiskSpec("oce", phi1), SampleSet(x, w))
        return DualSolution(np.array([0.0, val]), None, val, 0, 0.0, branch="nominal")

    def feasible(t2):
        b = _conj(phi1, -x - t2)
        if np.any(np.isinf(b)):
            return False, None
        if float(np.sum(w * b)) > 0:
            return False, None
        if float(np.max(b)) <= 0:
            v = weighted_sum(w, _conj(phi2, b))
            if v <= 0:
                return True, 0.0

        def H(t1):
            return weighted_sum(w, _conj(phi2, t1 + b)) - t1

        lo, hi = -float(np.max(b)) - 1.0, -float(np.min(b)) + 1.0
        t1, h, _ = minimize_convex_1d(H, lo, hi, xtol=1e-13)
        return h <= 0, t1

    t2, t1, iters, width = _bisect_t2(feasible, x, opts)
    return DualSolution(np.array([t1 if t1 is not None else 0.0, t2]), None, t2, iters, width,
                        branch="bisection")


def _solve_shortfall_ball(problem, data, opts):
    x, w = _active(data)
    phi1, phi2, r = problem.phi1, problem.phi2, problem.radius
    if r == 0:
        val = nominal_shortfall(RiskSpec("oce", phi1), SampleSet(x, w))
        return DualSolution(np.array([0.0, val]), math.inf, val, 0, 0.0, branch="nominal-limit")
    cap2 = _safe_cap(phi2)
    fp = phi2.finite_points or (0.5, 2.0)

    def feasible(t2):
        b = _conj(phi1, -t2 - x)
        if np.any(np.isinf(b)):
            return False, None
        eb = float(np.sum(w * b))
        if eb > 0:
            return False, None
        if float(np.max(b)) <= 0:
            # eta = 0 branch: t1 = -max b gives 0 <= t1
            return True, (-float(np.max(b)), 0.0)
        eta_max = -eb / r
        if eta_max <= 0:
            return False, None
        x0, y0 = fp
        lo1 = (eta_max * float(eval_phi(phi2, x0)) - x0 * eb) / (x0 - 1.0)
        hi1 = (eta_max * float(eval_phi(phi2, y0)) - y0 * eb) / (y0 - 1.0)
        lo1, hi1 = _pad(min(lo1, hi1), max(lo1, hi1), opts.box_pad)

        def oracle(p):
            t1, eta = p
            if eta <= 0:
                return math.inf, None, (-eta + 1e-300, np.array([0.0, -1.0]))
            s = b + t1
            j = int(np.argmax(s - cap2 * eta))
            if s[j] > cap2 * eta:
                return math.inf, None, (s[j] - cap2 * eta, np.array([1.0, -cap2]))
            a = s / eta
            v = _conj(phi2, a)
            d2 = _deriv(phi2, a)
            val = eta * float(np.sum(w * v)) + eta * r - t1
            grad = np.array([-1.0 + np.sum(w * d2), r + np.sum(w * (v - a * d2))])
            return val, grad, None

        res = ellipsoid_minimize(oracle, [lo1, opts.lambda_floor],
                                 [hi1, opts.box_pad * eta_max + opts.lambda_floor],
                                 tol=1e-12, max_iter=20_000,
                                 stop=lambda best, lb: best <= 0 or lb > 0)
        if res.x is not None and res.value <= 0:
            return True, (float(res.x[0]), float(res.x[1]))
        return False, None

    t2, info, iters, width = _bisect_t2(feasible, x, opts)
    t1, eta = info if info is not None else (0.0, 0.0)
    return DualSolution(np.array([t1, t2]), eta, t2, iters, width, branch="bisection")


# ------------------------------------------------------------- worst case


def worst_case_density(problem, data, sol):
    """Worst-case weights (g*, gbar*) from the partial derivatives of the dual integrand.

    g*_i = w_i (phi2*)'(s_i / lam) and gbar*_i = g*_i (phi1*)'(t2 - X_i) with
    s_i = phi1*(t2 - X_i) + t1 (lam = 1 for the penalty form), both renormalised.
    """
    if problem.form not in ("penalty", "ball"):
        raise DegenerateError(f"worst-case extraction not available for {problem.form}")
    x, w_full = data.values, data.weights
    if sol.branch == "nominal-limit":
        g = w_full.copy()
        d1 = np.asarray(eval_conjugate_deriv(problem.phi1, sol.theta[1] - x), dtype=float)
        gbar = g * d1
    else:
        lam = 1.0 if problem.form == "penalty" else sol.lam
        if lam is None or lam <= SolverOptions().lambda_floor * 10:
            raise DegenerateError("dual multiplier at the lambda floor")
        _check_interior(problem, data, sol)
        t1, t2 = sol.theta[0], sol.theta[1]
        t = t2 - x
        s = _conj(problem.phi1, t) + t1
        g = w_full * np.asarray(eval_conjugate_deriv(problem.phi2, s / lam), dtype=float)
        gbar = g * np.asarray(eval_conjugate_deriv(problem.phi1, t), dtype=float)
    mg, mb = float(np.sum(g)), float(np.sum(gbar))
    if not (mg > 1e-12 and mb > 1e-12) or not (math.isfinite(mg) and math.isfinite(mb)):
        raise DegenerateError("worst-case masses vanish or overflow")
    return g / mg, gbar / mb


def _check_interior(problem, data, sol, rel=1e-6):
    p = sol.point
    for j in range(p.size):
        for sgn in (-1.0, 1.0):
            q = p.copy()
            q[j] += sgn * rel * max(1.0, abs(q[j]))
            val, _ = dual_objective(problem, data, q)
            if not math.isfinite(val):
                raise DegenerateError("dual solution is on the boundary of the finite region")


def discrete_divergence(phi, q, p):
    """sum_i p_i phi(q_i / p_i) with p_i = 0 atoms charged q_i times the recession slope."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    pos = p > 0
    total = 0.0
    if np.any(pos):
        vals = np.asarray(eval_phi(phi, q[pos] / p[pos]), dtype=float)
        total = weighted_sum(p[pos], vals)
    extra = q[~pos]
    if np.any(extra > 0):
        slope = phi.conj_dom_upper
        total += float(np.sum(extra[extra > 0])) * slope
    return total


def primal_value(problem, data, g, gbar):
    """Primal objective at (g, gbar): E_gbar[-X] - I_phi1(gbar, g) [- I_phi2(g, w)].

    For the ball form the phi2 term enters as the constraint I_phi2(g, w) <= r
    and is not subtracted; the constraint slack is returned alongside.
    """
    x, w = data.values, data.weights
    core = float(np.dot(gbar, -x)) - discrete_divergence(problem.phi1, gbar, g)
    d2 = discrete_divergence(problem.phi2, g, w)
    if problem.form == "penalty":
        return core - d2, 0.0
    return core, problem.radius - d2


def brute_force_primal(problem, values, weights=None, starts=12, seed=0):
    """Maximise the discrete primal directly over (g, gbar) on the simplex (n <= 6 atoms).

    Multi-start SLSQP on a softmax-free parametrisation with simplex equality
    constraints, followed by a polish from the best start.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n > 6:
        raise ParamError("brute force limited to 6 atoms")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    if (problem.form == "penalty" and problem.phi2.identity) or (
            problem.form == "ball" and problem.radius == 0):
        return nominal_oce(RiskSpec("oce", problem.phi1), SampleSet(x, w))
    if problem.form not in ("penalty", "ball"):
        raise ParamError("brute force covers penalty and ball forms")
    data = SampleSet(x, w)
    eps = 1e-14

    def unpack(z):
        return np.maximum(z[:n], 0.0), np.maximum(z[n:], 0.0)

    def neg(z):
        g, gbar = unpack(z)
        val, _ = primal_value(problem, data, g, gbar)
        return -val if math.isfinite(val) else 1e30

    cons = [{"type": "eq", "fun": lambda z: np.sum(z[:n]) - 1.0},
            {"type": "eq", "fun": lambda z: np.sum(z[n:]) - 1.0}]
    if problem.form == "ball":
        cons.append({"type": "ineq",
                     "fun": lambda z: problem.radius - discrete_divergence(problem.phi2,
                                                                           *unpack(z)[:1], w)})
    rng = np.random.default_rng(seed)
    inits = [np.concatenate([w, w])]
    for _ in range(starts - 1):
        g = 0.7 * w + 0.3 * rng.dirichlet(np.ones(n))
        gb = 0.5 * g + 0.5 * rng.dirichlet(np.ones(n))
        inits.append(np.concatenate([g, gb]))
    best = -math.inf
    bounds = [(eps, 1.0)] * (2 * n)
    for z0 in inits:
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("ignore")
            res = optimize.minimize(neg, z0, method="SLSQP", bounds=bounds, constraints=cons,
                                    options={"ftol": 1e-15, "maxiter": 2000})
        g, gbar = unpack(res.x)
        if not (g.sum() > 0 and gbar.sum() > 0):
            continue
        g, gbar = g / g.sum(), gbar / gbar.sum()
        if problem.form == "ball":
            g = _pull_inside(problem, w, g)
        best = max(best, primal_value(problem, data, g, gbar)[0] if problem.form == "penalty"
                   else _ball_value(problem, data, g, gbar),
                   _refine_gbar(problem, data, g, gbar))
    return best


def _ball_value(problem, data, g, gbar):
    val, slack = primal_value(problem, data, g, gbar)
    return val if slack >= -1e-12 else -math.inf


def _pull_inside(problem, w, g):
    """Shrink g toward w until the phi2-ball constraint holds (the ball is convex)."""
    r = problem.radius
    if discrete_divergence(problem.phi2, g, w) <= r:
        return g
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if discrete_divergence(problem.phi2, w + mid * (g - w), w) <= r:
            lo = mid
        else:
            hi = mid
    return w + lo * (g - w)


def _refine_gbar(problem, data, g, gbar):
    # for fixed g the best gbar is explicit: sup over gbar is the nominal OCE under g
    spec = RiskSpec("oce", problem.phi1)
    gg = g / g.sum()
    try:
        core = nominal_oce(spec, SampleSet(data.values, gg))
    except NonFiniteError:
        return -math.inf
    d2 = discrete_divergence(problem.phi2, gg, data.weights)
    if problem.form == "penalty":
        return core - d2
    return core if d2 <= problem.radius + 1e-12 else -math.inf
