"""Scalar minimisation and tail-aware quadrature used across the package."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, xtol=1e-12, max_iter=500):
    """Minimise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = float(lo), float(hi)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    if fc <= fd:
        return c, fc
    return d, fd


def minimize_convex_1d(f, lo, hi, xtol=1e-12, grid=33, max_doublings=60):
    """Minimise a convex extended-real ``f`` starting from the bracket ``[lo, hi]``.

    A coarse grid locates the best finite point (golden section alone cannot
    tell which way to go when both probes are +inf); the bracket doubles on
    whichever side the grid minimum touches. Returns ``(x, fx, doublings)``.
    ``fx`` is +inf when no finite value was seen.
    """
    lo, hi = float(lo), float(hi)
    for k in range(max_doublings + 1):
        xs = np.linspace(lo, hi, grid)
        fs = np.array([f(x) for x in xs], dtype=float)
        fs[np.isnan(fs)] = np.inf
        j = int(np.argmin(fs))
        width = hi - lo
        if not np.isfinite(fs[j]):
            lo, hi = lo - width, hi + width
            continue
        if j == 0 and k < max_doublings:
            lo = lo - width
            continue
        if j == grid - 1 and k < max_doublings:
            hi = hi + width
            continue
        a = xs[max(j - 1, 0)]
        b = xs[min(j + 1, grid - 1)]
        x, fx = golden_section(f, a, b, xtol=xtol)
        if fs[j] < fx:
            x, fx = xs[j], fs[j]
        return float(x), float(fx), k
    return float("nan"), float("inf"), max_doublings


@dataclass(frozen=True)
class TailIntegral:
    value: float
    divergent: bool
    increments: tuple
    reason: str = ""


def _quad(func, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        with np.errstate(all="ignore"):
            val, _ = integrate.quad(func, a, b, limit=200, epsabs=1e-13, epsrel=1e-10)
    return val


_GL10 = np.polynomial.legendre.leggauss(10)
_GL20 = np.polynomial.legendre.leggauss(20)


def _quad_vec(func, a, b, rtol=1e-11, atol=1e-14, max_panels=4000):
    """Adaptive Gauss-Legendre (10 vs 20 nodes) for integrands taking arrays."""
    panels = [(a, b)]
    total = 0.0
    count = 0
    while panels:
        lo = np.array([p[0] for p in panels])
        hi = np.array([p[1] for p in panels])
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x10 = mid[:, None] + half[:, None] * _GL10[0][None, :]
        x20 = mid[:, None] + half[:, None] * _GL20[0][None, :]
        with np.errstate(all="ignore"):
            f10 = np.asarray(func(x10.ravel()), dtype=float).reshape(x10.shape)
            f20 = np.asarray(func(x20.ravel()), dtype=float).reshape(x20.shape)
        g10 = half * (f10 @ _GL10[1])
        g20 = half * (f20 @ _GL20[1])
        if not np.all(np.isfinite(g20)):
            return float("nan") if np.any(np.isnan(g20)) else float("inf")
        count += len(panels)
        err = np.abs(g20 - g10)
        ok = (err <= np.maximum(atol * half / max(b - a, 1e-300), rtol * np.abs(g20))) | (
            count > max_panels) | (half <= 1e-14 * np.maximum(1.0, np.abs(mid)))
        total += float(np.sum(g20[ok]))
        panels = [q for j in np.flatnonzero(~ok)
                  for q in ((lo[j], mid[j]), (mid[j], hi[j]))]
    return total


def _remainder(func, edge, direction, quad):
    # integral over [edge, +-inf) via x = edge + direction (1 - u) / u
    def mapped(u):
        u = np.asarray(u, dtype=float)
        x = edge + direction * (1.0 - u) / u
        with np.errstate(all="ignore"):
            val = np.asarray(func(x) if quad is _quad_vec else func(float(x)), dtype=float) / (u * u)
        return np.where(u > 0, val, 0.0)

    if quad is _quad_vec:
        return _quad_vec(mapped, 0.0, 1.0)
    return _quad(lambda u: float(mapped(u)), 0.0, 1.0)


RUN = 5


def _edge_mass(func, x, dist, quad):
    # |x - start| * |h(x)|: the mass a doubling interval ending at x would carry
    with np.errstate(all="ignore"):
        val = func(np.array([x])) if quad is _quad_vec else func(float(x))
    val = float(np.asarray(val, dtype=float).ravel()[0])
    return abs(val) * dist if math.isfinite(val) else math.inf


def _dies_out(func, start, direction, dist, eps, quad, steps=24):
    # look far ahead: a finite bump has |x| h(x) collapsing and still falling at the end
    far = [_edge_mass(func, start + direction * dist * 2.0 ** m, dist * 2.0 ** m, quad)
           for m in range(1, steps + 1)]
    tail = far[-4:]
    return tail[-1] < eps and all(tail[j + 1] <= tail[j] for j in range(3))


def _one_side(func, start, direction, width, rtol, atol, max_doublings, detect_after,
              quad=_quad):
    incs = []
    edges = []
    total = 0.0
    edge = start
    w = width
    small = 0
    for _ in range(max_doublings):
        nxt = edge + direction * w
        a, b = (edge, nxt) if direction > 0 else (nxt, edge)
        inc = quad(func, a, b)
        if not np.isfinite(inc):
            incs.append(inc)
            return total, True, incs, "non-finite increment"
        incs.append(inc)
        total += inc
        tol = atol + rtol * abs(total)
        travelled = abs(nxt - start)
        edges.append(_edge_mass(func, nxt, travelled, quad))
        if abs(inc) <= tol and travelled >= detect_after:
            small += 1
            if small >= 2:
                return total, False, incs, ""
        else:
            small = 0
        if len(incs) >= 4 and travelled >= detect_after:
            last = [abs(v) for v in incs[-4:]]
            if all(last[j + 1] <= 0.75 * last[j] for j in range(3)):
                # clear geometric decay: close the remaining tail in one transformed pass
                rest = _remainder(func, nxt, direction, quad)
                if np.isfinite(rest) and abs(rest) <= 4.0 * last[-1] + tol:
                    incs.append(rest)
                    return total + rest, False, incs, ""
        if len(incs) >= RUN and abs(edge - start) >= detect_after:
            # a finite bump past the bulk also gives rising increments for a while;
            # divergence needs RUN rising increments and an edge mass that is not
            # collapsing (|x| h(x) falls fast once the integrand is past its peak)
            last = [abs(v) for v in incs[-RUN:]]
            eps_scale = 10.0 * (atol + np.finfo(float).eps * max(abs(total), 1.0))
            rising = all(v > eps_scale for v in last) and all(
                last[j] <= last[j + 1] for j in range(RUN - 1))
            if rising and edges[-1] >= 0.5 * edges[-2] and not _dies_out(
                    func, start, direction, travelled, eps_scale, quad):
                return math.inf, True, incs, "increments non-decreasing over doublings"
        edge = nxt
        w *= 2.0
    return total, True, incs, "no convergence within doubling budget"


def integrate_tail(func, lower, upper, anchor=0.0, width=1.0, rtol=1e-9, atol=1e-12,
                   max_doublings=60, detect_after=0.0, vectorized=False):
    """Integrate ``func`` over ``[lower, upper]`` (possibly infinite).

    Infinite ends are covered by intervals whose widths double; the result is
    flagged divergent when the last five increments are non-decreasing and
    above tolerance (checked only once the sweep is ``detect_after`` away from
    the anchor, i.e. past the bulk), or when an increment is non-finite.
    Heuristic: it cannot prove divergence, only report it. With
    ``vectorized=True`` the integrand receives arrays of nodes.
    """
    quad = _quad_vec if vectorized else _quad
    lower, upper = float(lower), float(upper)
    anchor = float(np.clip(anchor, lower, upper))
    if np.isfinite(lower) and np.isfinite(upper):
        val = quad(func, lower, upper)
        return TailIntegral(val, not np.isfinite(val), (val,),
                            "" if np.isfinite(val) else "non-finite integral")
    total = 0.0
    incs = []
    divergent = False
    reasons = []
    if np.isfinite(upper):
        mid = quad(func, anchor, upper) if upper > anchor else 0.0
        total += mid
        incs.append(mid)
    elif np.isfinite(lower):
        mid = quad(func, lower, anchor) if anchor > lower else 0.0
        total += mid
        incs.append(mid)
    if not np.isfinite(upper):
        start = anchor if not np.isfinite(lower) else max(anchor, lower)
        val, div, side, why = _one_side(func, start, +1, width, rtol, atol, max_doublings,
                                         detect_after, quad)
        total += val
        incs.extend(side)
        divergent |= div
        if why:
            reasons.append("right: " + why)
    if not np.isfinite(lower):
        start = anchor if not np.isfinite(upper) else min(anchor, upper)
        val, div, side, why = _one_side(func, start, -1, width, rtol, atol, max_doublings,
                                         detect_after, quad)
        total += val
        incs.extend(side)
        divergent |= div
        if why:
            reasons.append("left: " + why)
    if divergent:
        total = math.inf
    return TailIntegral(total, divergent, tuple(incs), "; ".join(reasons))
