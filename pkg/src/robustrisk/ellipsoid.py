"""Central-cut/deep-cut ellipsoid method with a certified lower bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class EllipsoidResult:
    x: np.ndarray
    value: float
    iterations: int
    gap: float
    lower_bound: float
    converged: bool
    reason: str = ""


def ellipsoid_minimize(oracle, lower, upper, tol=1e-7, max_iter=200_000, stop=None):
    """Minimise a convex extended-real function over the box ``[lower, upper]``.

    ``oracle(x)`` returns ``(value, grad, cut)``. When ``value`` is finite
    ``grad`` is a subgradient; otherwise ``cut = (h, g)`` describes a violated
    convex constraint h(x) > 0 with subgradient g, used as a deep feasibility cut.

    The lower bound uses f(x*) >= f(c_k) - ||g_k||_{P_k} for the minimiser x*
    inside the current ellipsoid, so ``gap`` bounds the suboptimality of the
    returned point (given the minimiser lies in the box).
    ``stop(best, lower_bound)`` may end the run early.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.size
    mid = 0.5 * (lower + upper)
    hw = 0.5 * (upper - lower)
    c = np.zeros(n)
    P = np.eye(n) * float(n)
    best_x, best = None, math.inf
    lb = -math.inf
    k = 0
    reason = "iteration limit"
    converged = False
    for k in range(1, max_iter + 1):
        x = mid + hw * c
        viol = np.abs(c) - 1.0
        j = int(np.argmax(viol))
        objective_cut = False
        if viol[j] > 0:
            g = np.zeros(n)
            g[j] = math.copysign(1.0, c[j])
            h = viol[j]
        else:
            val, grad, cut = oracle(x)
            if math.isfinite(val):
                objective_cut = True
                g = np.asarray(grad, dtype=float) * hw
                if val < best:
                    best, best_x = val, x.copy()
            else:
                if cut is None:
                    reason = "infinite value without a cut"
                    break
                h, gx = cut
                g = np.asarray(gx, dtype=float) * hw
        # cuts are scale-free; normalise so huge subgradients don't overflow g'Pg
        scale = float(np.max(np.abs(g))) if np.all(np.isfinite(g)) else math.nan
        if scale == 0 and objective_cut:
            lb = best
            converged, reason = True, "zero subgradient"
            break
        if not scale > 0:
            reason = "degenerate cut"
            break
        gs = g / scale
        Pg = P @ gs
        gPg = float(gs @ Pg)
        if not gPg > 0 or not math.isfinite(gPg):
            reason = "degenerate cut"
            break
        norm_s = math.sqrt(gPg)
        norm = norm_s * scale
        if objective_cut:
            cand = min(best, val - norm)
            lb = max(lb, cand)
            alpha = (val - best) / norm
        else:
            alpha = h / norm
        if best_x is not None and best - lb <= tol * max(1.0, abs(best)):
            converged, reason = True, "gap below tolerance"
            break
        if stop is not None and stop(best, lb):
            converged, reason = True, "stopped"
            break
        if alpha >= 1.0:
            if objective_cut:
                lb = best
                converged, reason = True, "ellipsoid exhausted"
            else:
                reason = "feasible region empty"
            break
        alpha = max(alpha, 0.0)
        gt = Pg / norm_s
        c = c - (1.0 + n * alpha) / (n + 1.0) * gt
        if n == 1:
            # the ellipsoid is an interval; keep the part of it the cut allows
            P = P * (0.5 * (1.0 - alpha)) ** 2
            continue
        P = (n * n * (1.0 - alpha * alpha) / (n * n - 1.0)) * (
            P - (2.0 * (1.0 + n * alpha) / ((n + 1.0) * (1.0 + alpha))) * np.outer(gt, gt))
        P = 0.5 * (P + P.T)
    gap = best - lb if best_x is not None else math.inf
    return EllipsoidResult(best_x, best, k, gap, lb, converged, reason)
