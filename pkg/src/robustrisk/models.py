"""One-dimensional nominal distributions and weighted sample sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, stats

from ._specstr import bind, parse_call
from .errors import DomainError, ParamError, SupportError

__all__ = [
    "NominalModel",
    "SampleSet",
    "make_model",
    "get_model",
    "sample",
    "importance_sample",
    "quantile",
    "rng_for",
]


def rng_for(seed, stream=0):
    """Independent PCG64 generator for ``(seed, stream)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


class _GenLogNormal:
    """|X| = exp(Z) with Z generalised normal; normalising constant by quadrature."""

    def __init__(self, mu, sigma, p):
        self.mu, self.sigma, self.p = mu, sigma, p
        self._z = stats.gennorm(beta=p, loc=mu, scale=sigma * p ** (1.0 / p))
        kernel = lambda z: math.exp(-abs(z - mu) ** p / (p * sigma ** p))
        mass, _ = integrate.quad(kernel, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12)
        self.C = mass / sigma

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(all="ignore"):
            ly = np.log(np.where(y > 0, y, 1.0))
            val = (-math.log(self.C * self.sigma) - ly
                   - np.abs(ly - self.mu) ** self.p / (self.p * self.sigma ** self.p))
        return np.where(y > 0, val, -np.inf)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(all="ignore"):
            return np.where(y > 0, self._z.cdf(np.log(np.where(y > 0, y, 1.0))), 0.0)

    def sf(self, y):
        return 1.0 - self.cdf(y)

    def ppf(self, u):
        return np.exp(self._z.ppf(u))

    def isf(self, u):
        return np.exp(self._z.isf(u))

    def rvs(self, size, random_state):
        return np.exp(self._z.rvs(size=size, random_state=random_state))


@dataclass(frozen=True, eq=False)
class NominalModel:
    """A 1-D distribution: continuous (``dist`` set) or finitely supported (``atoms`` set).

    Continuous models wrap a base law for |X| or X; ``sign = -1`` places it on
    the negative axis (x = -y).
    """

    family: str
    params: dict
    support: tuple
    dist: object = None
    sign: float = 1.0
    atoms: Optional[tuple] = None

    @property
    def is_discrete(self):
        return self.atoms is not None

    def _require_density(self):
        if self.dist is None:
            raise DomainError(f"{self.family} has no density")

    def log_density(self, x):
        self._require_density()
        arr = np.asarray(x, dtype=float)
        val = np.asarray(self.dist.logpdf(self.sign * arr), dtype=float)
        return float(val) if np.ndim(x) == 0 else val

    def density(self, x):
        lv = self.log_density(x)
        return float(math.exp(lv)) if np.ndim(x) == 0 else np.exp(lv)

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        if self.is_discrete:
            vals, w = self.atoms
            out = np.array([w[vals <= v].sum() for v in np.atleast_1d(arr)])
            return float(out[0]) if np.ndim(x) == 0 else out
        if self.sign > 0:
            out = self.dist.cdf(arr)
        else:
            out = self.dist.sf(-arr)
        out = np.asarray(out, dtype=float)
        return float(out) if np.ndim(x) == 0 else out

    def quantile(self, u):
        return quantile(self, u)

    def mean(self):
        if self.is_discrete:
            vals, w = self.atoms
            return float(np.dot(vals, w))
        return float(self.sign * self.dist.mean())

    def draw(self, n, rng):
        if self.is_discrete:
            vals, w = self.atoms
            idx = rng.choice(len(vals), size=n, p=w)
            return vals[idx].astype(float)
        return self.sign * np.asarray(self.dist.rvs(size=n, random_state=rng), dtype=float)

    def __repr__(self):
        inner = ",".join(f"{k}={v:g}" for k, v in self.params.items()
                         if isinstance(v, (int, float)))
        return f"NominalModel({self.family}({inner}))"


def _positive(name, **vals):
    for k, v in vals.items():
        if not (v > 0 and math.isfinite(v)):
            raise ParamError(f"{name}: {k} must be positive, got {v}")


def make_model(family, reflect=False, **params):
    """Build a model; ``reflect`` mirrors it about 0."""
    fam = family.lower().replace("-", "_")
    p = {k: (float(v) if np.isscalar(v) else v) for k, v in params.items()}
    atoms = None
    if fam == "gaussian" or fam == "normal":
        mu, sigma = p.get("mu", 0.0), p.get("sigma", 1.0)
        _positive(fam, sigma=sigma)
        dist, sign, support = stats.norm(loc=mu, scale=sigma), 1.0, (-math.inf, math.inf)
        p = {"mu": mu, "sigma": sigma}
        fam = "gaussian"
    elif fam == "weibull_neg" or fam == "weibull":
        k, lam = p["k"], p.get("lambda", 1.0)
        _positive(fam, k=k, **{"lambda": lam})
        dist = stats.weibull_min(c=k, scale=lam)
        sign = -1.0 if fam == "weibull_neg" else 1.0
        support = (-math.inf, 0.0) if sign < 0 else (0.0, math.inf)
        p = {"k": k, "lambda": lam}
    elif fam == "pareto_neg" or fam == "pareto":
        alpha, xm = p.get("alpha", 2.0), p.get("xm", 1.0)
        _positive(fam, alpha=alpha, xm=xm)
        dist = stats.pareto(b=alpha, scale=xm)
        sign = -1.0 if fam == "pareto_neg" else 1.0
        support = (-math.inf, -xm) if sign < 0 else (xm, math.inf)
        p = {"alpha": alpha, "xm": xm}
    elif fam == "gln_neg":
        mu, sigma, pp = p.get("mu", 0.0), p["sigma"], p.get("p", 2.0)
        _positive(fam, sigma=sigma, p=pp)
        dist, sign, support = _GenLogNormal(mu, sigma, pp), -1.0, (-math.inf, 0.0)
        p = {"mu": mu, "sigma": sigma, "p": pp}
    elif fam == "lognormal":
        mu, sigma = p.get("mu", 0.0), p.get("sigma", 1.0)
        _positive(fam, sigma=sigma)
        dist, sign, support = stats.lognorm(s=sigma, scale=math.exp(mu)), 1.0, (0.0, math.inf)
        p = {"mu": mu, "sigma": sigma}
    elif fam == "student_t":
        nu, mu, sigma = p.get("nu", 3.0), p.get("mu", 0.0), p.get("sigma", 1.0)
        _positive(fam, nu=nu, sigma=sigma)
        dist, sign, support = stats.t(df=nu, loc=mu, scale=sigma), 1.0, (-math.inf, math.inf)
        p = {"nu": nu, "mu": mu, "sigma": sigma}
    elif fam == "exponential":
        rate = p.get("rate", 1.0)
        _positive(fam, rate=rate)
        dist, sign, support = stats.expon(scale=1.0 / rate), 1.0, (0.0, math.inf)
        p = {"rate": rate}
    elif fam == "lottery":
        x, prob = p["x"], p["p"]
        if not 0 < prob < 1:
            raise ParamError("lottery: p must lie in (0, 1)")
        dist, sign = None, 1.0
        atoms = (np.array([x, 0.0]), np.array([prob, 1.0 - prob]))
        support = (min(x, 0.0), max(x, 0.0))
        p = {"x": x, "p": prob}
    elif fam == "empirical":
        vals = np.asarray(params["values"], dtype=float).ravel()
        if vals.size == 0 or not np.all(np.isfinite(vals)):
            raise ParamError("empirical: need finite values")
        dist, sign = None, 1.0
        atoms = (vals, np.full(vals.size, 1.0 / vals.size))
        support = (float(vals.min()), float(vals.max()))
        p = {"n": float(vals.size)}
    else:
        raise ParamError(f"unknown model family {family!r}")
    if reflect:
        sign = -sign
        support = (-support[1], -support[0])
        if atoms is not None:
            atoms = (-atoms[0], atoms[1])
        fam = fam + "_reflected"
    return NominalModel(fam, p, support, dist, sign, atoms)


_MODEL_ARGS = {
    "gaussian": ("mu", "sigma"), "normal": ("mu", "sigma"),
    "weibull-neg": ("k", "lambda"), "weibull": ("k", "lambda"),
    "pareto-neg": ("alpha", "xm"), "pareto": ("alpha", "xm"),
    "gln-neg": ("mu", "sigma", "p"), "lognormal": ("mu", "sigma"),
    "student-t": ("nu", "mu", "sigma"), "exponential": ("rate",),
    "lottery": ("x", "p"),
}
_MODEL_DEFAULTS = {
    "gaussian": {"mu": 0.0, "sigma": 1.0}, "normal": {"mu": 0.0, "sigma": 1.0},
    "weibull-neg": {"lambda": 1.0}, "weibull": {"lambda": 1.0},
    "pareto-neg": {"alpha": 2.0, "xm": 1.0}, "pareto": {"alpha": 2.0, "xm": 1.0},
    "gln-neg": {"mu": 0.0, "p": 2.0}, "lognormal": {"mu": 0.0, "sigma": 1.0},
    "student-t": {"mu": 0.0, "sigma": 1.0}, "exponential": {"rate": 1.0},
}


def get_model(spec, reflect=False):
    """Parse ``"pareto_neg(alpha=2,xm=1)"``-style strings."""
    if isinstance(spec, NominalModel):
        return spec
    name, args, kwargs = parse_call(spec)
    if "reflect" in kwargs:
        reflect = bool(kwargs.pop("reflect"))
    if name not in _MODEL_ARGS:
        raise ParamError(f"unknown model family {name!r}")
    vals = bind(name, args, kwargs, _MODEL_ARGS[name], _MODEL_DEFAULTS.get(name))
    return make_model(name, reflect=reflect, **vals)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Loss/payoff samples with normalised weights (likelihood ratios under IS)."""

    values: np.ndarray
    weights: np.ndarray = None
    seed: Optional[int] = None
    proposal: Optional[NominalModel] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size == 0:
            raise ParamError("empty sample set")
        if self.weights is None:
            w = np.full(vals.size, 1.0 / vals.size)
        else:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape != vals.shape:
                raise ParamError("weights and values differ in length")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ParamError("weights must be finite and non-negative")
            total = w.sum()
            if total <= 0:
                raise ParamError("weights sum to zero")
            if abs(total - 1.0) > 1e-12:
                w = w / total
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.values.size

    def mean(self):
        return float(np.dot(self.weights, self.values))

    def shifted(self, c):
        return SampleSet(self.values + c, self.weights, self.seed, self.proposal, dict(self.meta))

    @classmethod
    def from_atoms(cls, values, weights=None):
        return cls(np.asarray(values, dtype=float), weights)


def sample(model, n, seed, stream=0):
    """``n`` i.i.d. draws with uniform weights; deterministic in ``(seed, stream)``."""
    model = get_model(model)
    n = int(n)
    if n < 1:
        raise ParamError("n must be at least 1")
    vals = model.draw(n, rng_for(seed, stream))
    return SampleSet(vals, None, seed, None, {"model": repr(model)})


def importance_sample(model, proposal, n, seed, stream=0):
    """Draws from ``proposal`` weighted by f/g, normalised to sum 1."""
    model, proposal = get_model(model), get_model(proposal)
    n = int(n)
    if n < 1:
        raise ParamError("n must be at least 1")
    ys = proposal.draw(n, rng_for(seed, stream))
    lg = np.asarray(proposal.log_density(ys), dtype=float)
    if np.any(~np.isfinite(lg)):
        raise SupportError("a draw has zero proposal density")
    lf = np.asarray(model.log_density(ys), dtype=float)
    logw = lf - lg
    if not np.any(np.isfinite(logw)):
        raise SupportError("no draw lies in the model's support")
    w = np.exp(logw - np.max(logw))
    return SampleSet(ys, w, seed, proposal, {"model": repr(model)})


def _bisect_quantile(model, u, tol=1e-10):
    lo, hi = model.support
    lo = -1.0 if not math.isfinite(lo) else lo
    hi = 1.0 if not math.isfinite(hi) else hi
    while model.support[0] < lo and model.cdf(lo) > u:
        lo = lo - 2.0 * max(1.0, abs(lo))
    while hi < model.support[1] and model.cdf(hi) < u:
        hi = hi + 2.0 * max(1.0, abs(hi))
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if model.cdf(mid) < u:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def quantile(model, u, method="auto"):
    """Inverse CDF; closed form where available, else bisection to 1e-10."""
    model = get_model(model)
    if np.ndim(u) > 0:
        arr = np.asarray(u, dtype=float)
        if np.any(~((arr > 0) & (arr < 1))):
            raise DomainError("quantile level must lie in (0, 1)")
        if model.is_discrete or method == "bisection":
            return np.array([quantile(model, v, method) for v in arr.ravel()]).reshape(arr.shape)
        return model.dist.ppf(arr) if model.sign > 0 else -model.dist.isf(arr)
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    if model.is_discrete:
        vals, w = model.atoms
        order = np.argsort(vals, kind="stable")
        cum = np.cumsum(w[order])
        j = int(np.searchsorted(cum, u - 1e-15))
        return float(vals[order][min(j, len(vals) - 1)])
    if method == "bisection":
        return _bisect_quantile(model, u)
    if model.sign > 0:
        return float(model.dist.ppf(u))
    return float(-model.dist.isf(u))
