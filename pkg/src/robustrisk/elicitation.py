"""Recover phi2* o phi1* (or the utility) from small-probability two-point lotteries.

For X_p = x with probability p and 0 otherwise, rho(X_p)/p tends to
phi2*(phi1*(-x)) as p -> 0. Expectations are exact over the two atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .divergences import eval_conjugate, eval_conjugate_deriv
from .errors import NonFiniteError, PreconditionError
from .models import SampleSet
from .risk import get_risk, nominal_oce
from .solver import RobustProblem, SolverOptions, solve

__all__ = ["ElicitationResult", "elicit_composite", "ce_recover", "default_p_seq", "richardson"]

# rho(X_p) is O(p); its error must stay well below p^2 for the ratios to settle
ELICIT_OPTIONS = SolverOptions(tol=1e-14, bisection_tol=1e-16, max_bisection=400)


def default_p_seq():
    return 2.0 ** -np.arange(4, 17)


@dataclass
class ElicitationResult:
    x: float
    estimates: np.ndarray
    extrapolated: float
    target_kind: str
    image: tuple = (-math.inf, math.inf)
    notes: list = field(default_factory=list)

    @property
    def ratios(self):
        return self.estimates[:, 1]

    def ratio_at(self, p):
        ps = self.estimates[:, 0]
        j = int(np.argmin(np.abs(np.log(ps) - math.log(p))))
        if not math.isclose(ps[j], p, rel_tol=1e-12):
            raise KeyError(f"p={p} not in the sequence")
        return float(self.estimates[j, 1])


def richardson(ps, ratios):
    """Linear-in-p extrapolation to p = 0 from the last two points."""
    p0, p1 = float(ps[-2]), float(ps[-1])
    r0, r1 = float(ratios[-2]), float(ratios[-1])
    return (r1 * p0 - r0 * p1) / (p0 - p1)


def _check_p_seq(p_seq):
    ps = np.asarray(default_p_seq() if p_seq is None else p_seq, dtype=float)
    if ps.ndim != 1 or ps.size < 2:
        raise PreconditionError("p_seq needs at least two probabilities")
    if np.any(ps <= 0) or np.any(ps > 0.5):
        raise PreconditionError("p_seq must lie in (0, 1/2]")
    if np.any(np.diff(ps) >= 0):
        raise PreconditionError("p_seq must be strictly decreasing")
    return ps


def _lottery(x, p):
    if x == 0:
        return SampleSet(np.array([0.0]), np.array([1.0]))
    return SampleSet(np.array([x, 0.0]), np.array([p, 1.0 - p]))


_GRID = np.concatenate([-np.geomspace(1e-3, 20.0, 25), np.geomspace(1e-3, 20.0, 25)])


def _dominates_identity(phi):
    if phi.conj_dom_upper != math.inf:
        return False
    vals = np.asarray(eval_conjugate(phi, _GRID), dtype=float)
    return bool(np.all(vals > _GRID))


def _image(phi):
    # phi*(s) > s forces phi* to be unbounded above
    return (float(eval_conjugate(phi, -1e3)), math.inf)


def elicit_composite(problem, x, p_seq=None, opts=None):
    """rho(X_p)/p over ``p_seq`` for a penalty or shortfall-penalty problem."""
    if not isinstance(problem, RobustProblem):
        raise PreconditionError("elicit_composite expects a RobustProblem")
    if problem.form not in ("penalty", "shortfall-penalty"):
        raise PreconditionError(f"elicitation needs a penalty form, got {problem.form}")
    ps = _check_p_seq(p_seq)
    phi1, phi2 = problem.phi1, problem.phi2
    if not _dominates_identity(phi1):
        raise PreconditionError(f"{phi1.label}: phi1* must be finite on R with phi1*(s) > s")
    if not phi2.identity and not _dominates_identity(phi2):
        raise PreconditionError(f"{phi2.label}: phi2* must be finite on R with phi2*(s) > s")
    if problem.form == "shortfall-penalty":
        slope = float(eval_conjugate_deriv(phi2, float(eval_conjugate(phi1, 0.0)))) \
            * float(eval_conjugate_deriv(phi1, 0.0))
        if not math.isclose(slope, 1.0, rel_tol=1e-9):
            raise PreconditionError(f"composite slope at 0 is {slope:g}, not 1")
    opts = opts or ELICIT_OPTIONS
    rows = []
    for p in ps:
        # X_p = 0 is riskless and every normalised measure maps it to 0
        val = 0.0 if x == 0 else solve(problem, _lottery(float(x), float(p)), opts).value
        rows.append((p, val / p))
    est = np.array(rows)
    if not np.all(np.isfinite(est[:, 1])):
        raise NonFiniteError("non-finite robust value along the p sequence")
    image = _image(phi1)
    res = ElicitationResult(float(x), est, richardson(est[:, 0], est[:, 1]), "composite", image)
    s = float(eval_conjugate(phi1, -float(x)))
    if not image[0] <= s <= image[1]:
        res.notes.append("phi1*(-x) outside the sampled image of phi1*; limit not trusted")
    return res


def ce_recover(spec, x, p_seq=None):
    """CE(X_p)/p -> u(x) = -phi1*(-x), with CE = -(nominal OCE)."""
    spec = get_risk(spec)
    ps = _check_p_seq(p_seq)
    u = spec.utility(_GRID)
    if abs(float(spec.utility(0.0))) > 1e-12 or np.any(u >= _GRID):
        raise PreconditionError(f"{spec.label}: need u(0) = 0 and u(x) < x for x != 0")
    rows = [(p, 0.0 - nominal_oce(spec, _lottery(float(x), float(p)), xtol=1e-15) / p) for p in ps]
    est = np.array(rows)
    return ElicitationResult(float(x), est, richardson(est[:, 0], est[:, 1]), "utility")
