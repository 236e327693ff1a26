"""phi-divergences: catalog, conjugates, perspectives and tail-tailored constructions.

Every divergence is stored as the triple (phi, phi*, (phi*)') plus domain
metadata. Functions act elementwise on numpy arrays and return extended reals
(``numpy.inf`` outside the effective domain).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import optimize

from ._numerics import integrate_tail
from ._specstr import bind, parse_call
from .errors import ConstructionError, DomainError, ParamError, QuadratureError

OVERFLOW = 1e300
LOG_OVERFLOW = math.log(OVERFLOW)

__all__ = [
    "Divergence",
    "TailSpec",
    "eval_phi",
    "eval_conjugate",
    "eval_conjugate_deriv",
    "perspective_conjugate",
    "construct_from_tail",
    "make_tailored",
    "divergence_value",
    "get_divergence",
    "kl",
    "chi2",
    "modified_chi2",
    "burg",
    "total_variation",
    "polynomial",
    "cvar_indicator",
    "degenerate",
]


@dataclass(frozen=True, eq=False)
class Divergence:
    """A divergence function phi in Phi_0 together with its conjugate.

    ``finite_points`` holds two points x0 < 1 < y0 with phi finite (used to
    bound dual search regions); ``None`` when dom(phi) has no interior.
    ``phi_over_t_log`` evaluates phi(t)/t from log(t), for likelihood ratios
    too large to exponentiate; ``log_phi_over_t_log`` is its logarithm, for
    when phi(t)/t itself overflows.
    """

    name: str
    params: Mapping[str, float]
    phi: Callable
    conjugate: Callable
    conjugate_deriv: Callable
    dom_upper: float = math.inf
    conj_dom_upper: float = math.inf
    finite_points: Optional[tuple] = (0.5, 2.0)
    phi_over_t_log: Optional[Callable] = None
    log_phi_over_t_log: Optional[Callable] = None
    log_conjugate_deriv: Optional[Callable] = None
    identity: bool = False
    constants: Mapping[str, float] = field(default_factory=dict)

    @property
    def label(self):
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}({inner})"

    def __repr__(self):
        return f"Divergence({self.label})"


def _as_array(x):
    return np.asarray(x, dtype=float)


def _out(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def _cap(values):
    values = np.asarray(values, dtype=float)
    return np.where(values > OVERFLOW, np.inf, values)


def eval_phi(d, t):
    """phi(t) with phi(0) taken as the right limit and +inf off the domain."""
    arr = _as_array(t)
    with np.errstate(all="ignore"):
        val = np.asarray(d.phi(arr), dtype=float)
    return _out(val, t)


def eval_conjugate(d, s):
    """phi*(s); values beyond 1e300 are reported as +inf."""
    arr = _as_array(s)
    with np.errstate(all="ignore"):
        val = _cap(d.conjugate(arr))
    return _out(val, s)


def eval_conjugate_deriv(d, s):
    """(phi*)'(s), right derivative at kinks.

    Raises DomainError for s at or beyond the upper end of dom(phi*).
    """
    arr = _as_array(s)
    if np.any(arr >= d.conj_dom_upper) or np.any(np.isnan(arr)):
        raise DomainError(f"{d.label}: conjugate derivative undefined at s >= {d.conj_dom_upper}")
    with np.errstate(all="ignore"):
        val = np.asarray(d.conjugate_deriv(arr), dtype=float)
    return _out(val, s)


def perspective_conjugate(d, s, lam):
    """lam * phi*(s / lam), with 0*phi*(s/0) = 0 for s <= 0 and +inf for s > 0."""
    s_arr, l_arr = np.broadcast_arrays(_as_array(s), _as_array(lam))
    if np.any(l_arr < 0):
        raise DomainError("perspective requires lambda >= 0")
    out = np.empty(s_arr.shape, dtype=float)
    pos = l_arr > 0
    with np.errstate(all="ignore"):
        out[pos] = l_arr[pos] * _cap(d.conjugate(s_arr[pos] / l_arr[pos]))
    zero = ~pos
    out[zero] = np.where(s_arr[zero] <= 0, 0.0, np.inf)
    out = _cap(np.where(np.isnan(out), np.inf, out))
    if np.ndim(s) == 0 and np.ndim(lam) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------- catalog


def kl(gamma=1.0):
    """Kullback-Leibler, scaled by 1/gamma (gamma=1 is the plain KL)."""
    if gamma <= 0:
        raise ParamError("kl: gamma must be positive")
    g = float(gamma)

    def phi(t):
        with np.errstate(all="ignore"):
            val = (np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0) - t + 1.0) / g
        return np.where(t < 0, np.inf, val)

    def phi_over_t_log(lt):
        return (lt - 1.0 + math.exp(-lt)) / g

    params = {} if g == 1.0 else {"gamma": g}
    return Divergence(
        "kl", params, phi,
        lambda s: np.expm1(g * s) / g,
        lambda s: np.exp(g * s),
        phi_over_t_log=phi_over_t_log,
        log_conjugate_deriv=lambda s: g * s,
    )


def chi2():
    """chi-squared distance phi(t) = (t-1)^2 / t."""

    def phi(t):
        with np.errstate(all="ignore"):
            val = (t - 1.0) ** 2 / t
        return np.where(t <= 0, np.inf, val)

    def conj(s):
        with np.errstate(all="ignore"):
            val = 2.0 - 2.0 * np.sqrt(np.clip(1.0 - s, 0.0, None))
        return np.where(s > 1.0, np.inf, val)

    def deriv(s):
        with np.errstate(all="ignore"):
            return 1.0 / np.sqrt(1.0 - s)

    return Divergence("chi2", {}, phi, conj, deriv, conj_dom_upper=1.0)


def modified_chi2():
    """Modified chi-squared phi(t) = (t-1)^2."""

    def phi(t):
        return np.where(t < 0, np.inf, (t - 1.0) ** 2)

    def conj(s):
        return np.where(s >= -2.0, s + s * s / 4.0, -1.0)

    def deriv(s):
        return np.maximum(1.0 + s / 2.0, 0.0)

    return Divergence("modified-chi2", {}, phi, conj, deriv)


def burg():
    """Burg entropy phi(t) = -log t + t - 1."""

    def phi(t):
        with np.errstate(all="ignore"):
            val = -np.log(t) + t - 1.0
        return np.where(t <= 0, np.inf, val)

    def conj(s):
        with np.errstate(all="ignore"):
            val = -np.log(1.0 - s)
        return np.where(s >= 1.0, np.inf, val)

    def deriv(s):
        with np.errstate(all="ignore"):
            return 1.0 / (1.0 - s)

    return Divergence("burg", {}, phi, conj, deriv, conj_dom_upper=1.0)


def total_variation():
    """Total variation phi(t) = |t - 1|; conjugate from standard tables."""

    def phi(t):
        return np.where(t < 0, np.inf, np.abs(t - 1.0))

    def conj(s):
        return np.where(s > 1.0, np.inf, np.maximum(s, -1.0))

    def deriv(s):
        return np.where(s >= -1.0, 1.0, 0.0)

    return Divergence("tv", {}, phi, conj, deriv, conj_dom_upper=1.0)


def polynomial(p):
    """Polynomial divergence (t^p - p(t-1) - 1) / (p(p-1)), p > 0, p != 1."""
    p = float(p)
    if p <= 0 or p == 1.0:
        raise ParamError("polynomial: need p > 0 and p != 1")
    q = p / (p - 1.0)

    def phi(t):
        with np.errstate(all="ignore"):
            val = (np.power(np.clip(t, 0.0, None), p) - p * (t - 1.0) - 1.0) / (p * (p - 1.0))
        return np.where(t < 0, np.inf, val)

    if p > 1:
        def conj(s):
            with np.errstate(all="ignore"):
                return np.power(np.maximum(1.0 + (p - 1.0) * s, 0.0), q) / p - 1.0 / p

        def deriv(s):
            with np.errstate(all="ignore"):
                return np.power(np.maximum(1.0 + (p - 1.0) * s, 0.0), 1.0 / (p - 1.0))

        upper = math.inf
    else:
        def conj(s):
            base = 1.0 + (p - 1.0) * s
            with np.errstate(all="ignore"):
                val = np.power(np.where(base > 0, base, 1.0), q) / p - 1.0 / p
            return np.where(base > 0, val, np.inf)

        def deriv(s):
            base = 1.0 + (p - 1.0) * s
            with np.errstate(all="ignore"):
                return np.where(base > 0, np.power(np.where(base > 0, base, 1.0), 1.0 / (p - 1.0)),
                                np.inf)

        upper = 1.0 / (1.0 - p)

    def phi_over_t_log(lt):
        with np.errstate(over="ignore"):
            head = math.exp((p - 1.0) * lt) if (p - 1.0) * lt < 700 else math.inf
        return (head - p + (p - 1.0) * math.exp(-lt)) / (p * (p - 1.0))

    def log_phi_over_t_log(lt):
        if (p - 1.0) * lt > 40.0:
            return (p - 1.0) * lt - math.log(p * (p - 1.0))
        return _safe_log(phi_over_t_log(lt))

    return Divergence("polynomial", {"p": p}, phi, conj, deriv, conj_dom_upper=upper,
                      phi_over_t_log=phi_over_t_log, log_phi_over_t_log=log_phi_over_t_log)


def cvar_indicator(alpha):
    """Indicator of [0, 1/(1-alpha)]; its conjugate is max(s/(1-alpha), 0)."""
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise ParamError("cvar-indicator: alpha must lie in (0, 1)")
    top = 1.0 / (1.0 - alpha)

    def phi(t):
        return np.where((t >= 0) & (t <= top), 0.0, np.inf)

    def conj(s):
        return np.maximum(s * top, 0.0)

    def deriv(s):
        return np.where(s >= 0, top, 0.0)

    y0 = min(2.0, 0.5 * (1.0 + top))
    return Divergence("cvar-indicator", {"alpha": alpha}, phi, conj, deriv, dom_upper=top,
                      finite_points=(0.5, y0), phi_over_t_log=lambda lt: math.inf)


def degenerate():
    """phi = indicator of {1}: the ball it induces contains only the nominal."""

    def phi(t):
        return np.where(t == 1.0, 0.0, np.inf)

    return Divergence("degenerate", {}, phi, lambda s: s * 1.0, lambda s: np.ones_like(s),
                      dom_upper=1.0, finite_points=None, identity=True,
                      phi_over_t_log=lambda lt: math.inf)


# ------------------------------------------------- conjugate-defined divergences


class _ConjugateDefined:
    """phi* = e^s - 1 for s <= 0 and a convex tail for s >= 0; phi by biconjugation."""

    def __init__(self, conj_pos, deriv_pos, log_conj_pos=None, log_deriv_pos=None,
                 conj_vec=None, deriv_vec=None, far=None):
        self.far = far
        self.conj_pos = conj_pos
        self.deriv_pos = deriv_pos
        self.conj_vec, self.deriv_vec = conj_vec, deriv_vec
        self.log_conj_pos = log_conj_pos or (lambda s: _safe_log(conj_pos(s)))
        self.log_deriv_pos = log_deriv_pos or (lambda s: _safe_log(deriv_pos(s)))

    def conjugate(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        neg = s <= 0
        out[neg] = np.expm1(s[neg])
        if np.any(~neg):
            if self.conj_vec is not None:
                out[~neg] = self.conj_vec(s[~neg])
            else:
                out[~neg] = [self._conj_scalar(v) for v in np.atleast_1d(s[~neg])]
        return out

    def _conj_scalar(self, s):
        with np.errstate(all="ignore"):
            if self.log_conj_pos(s) > LOG_OVERFLOW:
                return math.inf
            return float(self.conj_pos(s))

    def conjugate_deriv(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        neg = s < 0
        out[neg] = np.exp(s[neg])
        if np.any(~neg) and self.deriv_vec is not None:
            out[~neg] = self.deriv_vec(s[~neg])
        elif np.any(~neg):
            with np.errstate(all="ignore"):
                out[~neg] = [math.inf if self.log_deriv_pos(v) > LOG_OVERFLOW
                             else float(self.deriv_pos(v)) for v in np.atleast_1d(s[~neg])]
        return out

    def log_deriv(self, s):
        return s if s < 0 else self.log_deriv_pos(s)

    def _argmax(self, t):
        # solves (phi*)'(s) = t on s >= 0 (t > 1); bracket grown from [0, 1]
        lo, hi = 0.0, 1.0
        target = math.log(t)
        while self.log_deriv_pos(hi) < target:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                return math.inf
        return optimize.brentq(lambda s: self.log_deriv_pos(s) - target, lo, hi,
                               xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    def phi_scalar(self, t):
        if t < 0 or math.isnan(t):
            return math.inf
        if t == 0:
            return 1.0
        if t <= 1.0:
            return t * math.log(t) - t + 1.0
        if math.isinf(t):
            return math.inf
        if t > 1e8:
            return t * self.phi_over_t_log(math.log(t))
        s = self._argmax(t)
        if math.isinf(s):
            return math.inf
        return s * t - self._conj_scalar(s)

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        flat = [self.phi_scalar(v) for v in t.ravel()]
        return np.array(flat, dtype=float).reshape(t.shape)

    def phi_over_t_log(self, lt):
        if lt <= math.log(1e8):
            t = math.exp(lt)
            return self.phi_scalar(t) / t
        lo, hi = 0.0, 1.0
        while self.log_deriv_pos(hi) < lt:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                return math.inf
        s = optimize.brentq(lambda v: self.log_deriv_pos(v) - lt, lo, hi,
                            xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        return s - math.exp(self.log_conj_pos(s) - lt)

    def log_phi_over_t_log(self, lt):
        rate = self.phi_over_t_log(lt)
        if math.isfinite(rate) or self.far is None:
            return _safe_log(rate)
        # maximiser beyond 1e300: solve in L = log(s + shift) instead
        return self.far(lt)


def _safe_log(x):
    x = float(x)
    if x <= 0:
        return -math.inf
    return math.log(x)


def _from_conjugate(name, params, core, constants=None):
    return Divergence(
        name, params, core.phi, core.conjugate, core.conjugate_deriv,
        phi_over_t_log=core.phi_over_t_log,
        log_phi_over_t_log=core.log_phi_over_t_log,
        log_conjugate_deriv=core.log_deriv,
        constants=dict(constants or {}),
    )


@dataclass(frozen=True)
class TailSpec:
    """Increasing convex tail psi on [0, inf) with its value and derivatives at 0.

    ``psi_deriv`` is optional; without it psi' is taken by central differences.
    """

    psi: Callable[[float], float]
    psi_d1_at0: float
    psi_d2_at0: float
    psi_value_at0: float
    psi_deriv: Optional[Callable[[float], float]] = None


def construct_from_tail(spec, grid=None):
    """Divergence whose conjugate is the normalised tail for s >= 0 and e^s - 1 below."""
    d2 = float(spec.psi_d2_at0)
    if not (d2 > 0 and math.isfinite(d2)):
        raise ConstructionError("psi''(0) must be finite and positive")
    d1, v0 = float(spec.psi_d1_at0), float(spec.psi_value_at0)
    psi = spec.psi

    if spec.psi_deriv is not None:
        dpsi = spec.psi_deriv
    else:
        def dpsi(s):
            h = 1e-6 * max(1.0, abs(s))
            lo = max(s - h, 0.0)
            return (psi(s + h) - psi(lo)) / (s + h - lo)

    # user tails may use math.exp; overflow there means +inf
    def conj_pos(s):
        try:
            return (psi(s) + (d2 - d1) * s - v0) / d2
        except OverflowError:
            return math.inf

    def deriv_pos(s):
        try:
            return (dpsi(s) + d2 - d1) / d2
        except OverflowError:
            return math.inf

    grid = np.linspace(0.0, 50.0, 501) if grid is None else np.asarray(grid, dtype=float)
    with np.errstate(all="ignore"):
        vals = np.array([conj_pos(s) for s in grid], dtype=float)
    fin = np.isfinite(vals)
    v = vals[fin]
    if v.size < 3:
        raise ConstructionError("normalised tail is not finite on the validation grid")
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.any(np.diff(v) < -1e-10 * scale):
        raise ConstructionError("normalised tail is not monotone on the validation grid")
    g = grid[fin]
    if np.any(np.diff(v) / np.diff(g) < -1e-12):
        raise ConstructionError("normalised tail is decreasing")
    second = v[:-2] - 2 * v[1:-1] + v[2:]
    if np.any(second < -1e-9 * scale):
        raise ConstructionError("normalised tail is not convex on the validation grid")
    core = _ConjugateDefined(conj_pos, deriv_pos)
    return _from_conjugate("constructed", {}, core,
                           constants={"c1": 1.0 / d2, "c2": 1.0 - d1 / d2, "c3": -v0 / d2})


class _ExpTail:
    """Tail c1 * v exp(E(v)) + c2 s + c3 with v = s + shift, in log-safe form.

    ``expo_l`` and ``dexpo_l`` give E(v) and v E'(v) as functions of L = log v,
    which keeps the tail usable past v = 1e300.
    """

    def __init__(self, shift, expo_l, dexpo_l, c1, c2, c3):
        self.shift, self.expo_l, self.dexpo_l = shift, expo_l, dexpo_l
        self.expo = lambda v: expo_l(np.log(v))
        self.v_dexpo = lambda v: dexpo_l(np.log(v))
        self.c1, self.c2, self.c3 = c1, c2, c3
        self.log_c1 = math.log(c1)

    def far(self, lt):
        """log(phi(t)/t) for log t = lt when the maximiser s exceeds 1e300.

        There phi*'(s) ~ c1 e^E (1 + vE') and phi*(s)/phi*'(s) ~ v / (1 + vE'), so
        phi(t)/t = s - phi*(s)/t ~ v vE' / (1 + vE').
        """
        def h(L):
            return self.log_c1 + self.expo_l(L) + math.log1p(self.dexpo_l(L)) - lt

        lo, hi = 690.0, 1380.0
        while h(hi) < 0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                return math.inf
        L = optimize.brentq(h, lo, hi, xtol=1e-12, maxiter=500)
        dv = self.dexpo_l(L)
        return L + math.log(dv) - math.log1p(dv)

    def conj_pos(self, s):
        v = s + self.shift
        with np.errstate(all="ignore"):
            return self.c1 * v * math.exp(self.expo(v)) + self.c2 * s + self.c3

    def deriv_pos(self, s):
        v = s + self.shift
        with np.errstate(all="ignore"):
            return self.c1 * math.exp(self.expo(v)) * (1.0 + self.v_dexpo(v)) + self.c2

    def log_conj_pos(self, s):
        v = s + self.shift
        head = self.log_c1 + math.log(v) + self.expo(v)
        if head > 700:
            return head
        return _safe_log(self.conj_pos(s))

    def log_deriv_pos(self, s):
        v = s + self.shift
        head = self.log_c1 + self.expo(v) + math.log1p(self.v_dexpo(v))
        if head > 700:
            return head
        return _safe_log(self.deriv_pos(s))

    def conj_vec(self, s):
        v = s + self.shift
        with np.errstate(all="ignore"):
            e = self.expo(v)
            head = self.log_c1 + np.log(v) + e
            val = self.c1 * v * np.exp(e) + self.c2 * s + self.c3
        return np.where(head > LOG_OVERFLOW, np.inf, val)

    def deriv_vec(self, s):
        v = s + self.shift
        with np.errstate(all="ignore"):
            e = self.expo(v)
            head = self.log_c1 + e + np.log1p(self.v_dexpo(v))
            val = self.c1 * np.exp(e) * (1.0 + self.v_dexpo(v)) + self.c2
        return np.where(head > LOG_OVERFLOW, np.inf, val)


def _log_power_constants(a, p):
    # c1 matches phi*''(0) = 1, c2 matches phi*'(0) = 1, c3 matches phi*(0) = 0
    c1 = 1.0 / (p * p * (a * a + a) * math.exp(a - 1.0))
    c2 = 1.0 - c1 * math.exp(a) * (a * p + 1.0)
    c3 = -c1 * math.exp(a + 1.0)
    return c1, c2, c3


def make_tailored(kind, params):
    """Tailored divergences specified through their conjugate tail.

    ``gl_cvar``: CVaR under a generalised log-normal nominal (sigma, p, d);
    ``weibull_power``: CVaR under a Weibull nominal (k, d);
    ``entropic_weibull``: entropic risk under a Weibull nominal (gamma, lambda, k).
    """
    kind = kind.replace("-", "_")
    params = {k: float(v) for k, v in params.items()}
    if kind == "gl_cvar":
        sigma, p, d = params["sigma"], params["p"], params["d"]
        if not (sigma > 0 and p >= 2 and d > 1):
            raise ParamError("gl_cvar needs sigma > 0, p >= 2, d > 1")
        a = 1.0 / (p * (sigma * d) ** p)
        c1, c2, c3 = _log_power_constants(a, p)
        tail = _ExpTail(math.e, lambda L: a * L ** p, lambda L: a * p * L ** (p - 1.0),
                        c1, c2, c3)
        name, shown = "gl-cvar", {"sigma": sigma, "p": p, "d": d}
    elif kind == "weibull_power":
        k, d = params["k"], params["d"]
        if not (k > 0 and d > 1):
            raise ParamError("weibull_power needs k > 0, d > 1")
        q = k / d
        c1 = 1.0 / (math.e * q * (2.0 * q + 1.0))
        c2 = 1.0 - c1 * math.e * (1.0 + q)
        c3 = -c1 * math.e
        a = q
        tail = _ExpTail(1.0, lambda L: np.exp(q * L), lambda L: q * np.exp(q * L), c1, c2, c3)
        name, shown = "weibull-power", {"k": k, "d": d}
    elif kind == "entropic_weibull":
        gamma, lam, k = params["gamma"], params["lambda"], params["k"]
        if not (gamma > 0 and lam > 0 and k > 1):
            raise ParamError("entropic_weibull needs gamma > 0, lambda > 0, k > 1")
        a = 1.0 / (2.0 * gamma * lam) ** k
        c1, c2, c3 = _log_power_constants(a, k)
        tail = _ExpTail(math.e, lambda L: a * L ** k, lambda L: a * k * L ** (k - 1.0),
                        c1, c2, c3)
        name, shown = "entropic-weibull", {"gamma": gamma, "lambda": lam, "k": k}
    else:
        raise ParamError(f"unknown tailored divergence {kind!r}")
    core = _ConjugateDefined(tail.conj_pos, tail.deriv_pos, tail.log_conj_pos, tail.log_deriv_pos,
                             tail.conj_vec, tail.deriv_vec, tail.far)
    return _from_conjugate(name, shown, core, constants={"a": a, "c1": c1, "c2": c2, "c3": c3})


# ------------------------------------------------------------ id strings

_NAMES = {
    "kl": (("gamma",), {"gamma": 1.0}),
    "chi2": ((), {}),
    "modified-chi2": ((), {}),
    "burg": ((), {}),
    "tv": ((), {}),
    "polynomial": (("p",), {}),
    "cvar-indicator": (("alpha",), {}),
    "gl-cvar": (("sigma", "p", "d"), {}),
    "weibull-power": (("k", "d"), {}),
    "entropic-weibull": (("gamma", "lambda", "k"), {}),
    "degenerate": ((), {}),
}


def get_divergence(spec):
    """Resolve an id string such as ``"polynomial(3)"`` or ``"gl-cvar(0.3,2,2)"``."""
    if isinstance(spec, Divergence):
        return spec
    name, args, kwargs = parse_call(spec)
    aliases = {"total-variation": "tv", "kullback-leibler": "kl", "cvar": "cvar-indicator",
               "modified-chi-squared": "modified-chi2", "identity": "degenerate"}
    name = aliases.get(name, name)
    if name not in _NAMES:
        raise ParamError(f"unknown divergence {name!r}")
    names, defaults = _NAMES[name]
    vals = bind(name, args, kwargs, names, defaults)
    if name == "kl":
        return kl(vals["gamma"])
    if name == "polynomial":
        return polynomial(vals["p"])
    if name == "cvar-indicator":
        return cvar_indicator(vals["alpha"])
    if name in ("gl-cvar", "weibull-power", "entropic-weibull"):
        return make_tailored(name, vals)
    return {"chi2": chi2, "modified-chi2": modified_chi2, "burg": burg,
            "tv": total_variation, "degenerate": degenerate}[name]()


# --------------------------------------------------------- divergence value


def _log_density_fn(obj):
    if hasattr(obj, "log_density"):
        return obj.log_density

    def logf(x):
        with np.errstate(divide="ignore"):
            return math.log(max(float(obj(x)), 0.0)) if obj(x) > 0 else -math.inf

    return logf


def divergence_value(phi, g, f, support, anchor=None, width=None, detect_after=None,
                     check_normalisation=True):
    """I_phi(g, f) = int phi(g/f) f dx by tail-doubling quadrature.

    ``g`` and ``f`` may be callables or objects with ``density``/``log_density``
    (e.g. NominalModel). Returns +inf when the tail sweep looks divergent.
    """
    lo, hi = float(support[0]), float(support[1])
    log_g, log_f = _log_density_fn(g), _log_density_fn(f)
    if anchor is None:
        anchor = _default_anchor(f, lo, hi)
    if width is None:
        width = _default_width(f)
    if detect_after is None:
        detect_after = _default_reach(f, anchor)

    if check_normalisation:
        for label, logd in (("g", log_g), ("f", log_f)):
            mass = integrate_tail(lambda x: math.exp(logd(x)), lo, hi, anchor=anchor,
                                  width=width, detect_after=detect_after)
            if mass.divergent or abs(mass.value - 1.0) > 1e-4:
                raise QuadratureError(f"density {label} integrates to {mass.value}, not 1")

    slope = phi.conj_dom_upper
    phi0 = float(eval_phi(phi, 0.0))

    def integrand(x):
        lf, lg = log_f(x), log_g(x)
        if lf == -math.inf:
            if lg == -math.inf:
                return 0.0
            return math.exp(lg) * slope if slope != 0 else 0.0
        if lg == -math.inf:
            return math.exp(lf) * phi0
        lr = lg - lf
        # large ratios go through phi(t)/t so that f * phi(g/f) never overflows
        if lr < 18.0 or (lr < 700 and phi.phi_over_t_log is None):
            val = math.exp(lf) * float(eval_phi(phi, math.exp(lr)))
        elif phi.log_phi_over_t_log is not None:
            log_rate = phi.log_phi_over_t_log(lr)
            expo = lg + log_rate
            val = 0.0 if log_rate == -math.inf else (math.inf if expo > 709.0 else math.exp(expo))
        else:
            rate = phi.phi_over_t_log(lr) if phi.phi_over_t_log is not None else slope
            val = math.exp(lg) * rate
        if math.isnan(val):
            raise QuadratureError(f"integrand undefined at x={x}")
        return val

    res = integrate_tail(integrand, lo, hi, anchor=anchor, width=width,
                         detect_after=detect_after)
    return math.inf if res.divergent else max(res.value, 0.0)


def _default_anchor(f, lo, hi):
    if hasattr(f, "quantile"):
        try:
            return float(f.quantile(0.5))
        except Exception:
            pass
    if math.isfinite(lo) and math.isfinite(hi):
        return 0.5 * (lo + hi)
    if math.isfinite(lo):
        return lo + 1.0
    if math.isfinite(hi):
        return hi - 1.0
    return 0.0


def _default_width(f):
    if hasattr(f, "quantile"):
        try:
            w = float(f.quantile(0.75) - f.quantile(0.25))
            if w > 0 and math.isfinite(w):
                return w
        except Exception:
            pass
    return 1.0


def _default_reach(f, anchor):
    if hasattr(f, "quantile"):
        try:
            a = abs(float(f.quantile(1e-6)) - anchor)
            b = abs(float(f.quantile(1 - 1e-6)) - anchor)
            return max(a, b)
        except Exception:
            pass
    return 0.0
