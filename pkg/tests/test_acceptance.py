"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the report lines.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy import optimize, stats

from robustrisk.divergences import (
    TailSpec,
    construct_from_tail,
    eval_conjugate,
    eval_conjugate_deriv,
    eval_phi,
    get_divergence,
)
from robustrisk.elicitation import elicit_composite
from robustrisk.experiments import (
    EXACT_CVAR,
    HedgingConfig,
    NewsvendorConfig,
    divergence_comparison,
    hedging_study,
    newsvendor_closed_form,
    newsvendor_robust_curve,
    toy_pareto_cvar,
)
from robustrisk.finiteness import NOMINAL_COLUMNS, finiteness_table, moment_content_check
from robustrisk.models import SampleSet, get_model, sample
from robustrisk.risk import cvar, empirical_cvar, exact_oce
from robustrisk.solver import RobustProblem, brute_force_primal, primal_value, solve


def report(name, ok, detail, elapsed, limit):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    print(f"\n{status} {name}: {detail} [{elapsed:.1f}s, limit {limit:g}s]")
    assert ok, detail
    assert within, f"took {elapsed:.1f}s"


@pytest.fixture(autouse=True)
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def test_exact_cvar_oracle():
    t0 = time.perf_counter()
    val = exact_oce(cvar(0.975), get_model("pareto_neg(alpha=2,xm=1)"))
    # loss |X| has P(|X| > y) = y^-2, so CVaR = 2 q with q = 0.025^-1/2
    oracle = 2.0 / math.sqrt(0.025)
    ok = abs(val - 12.649) <= 0.01 and abs(val - oracle) < 1e-6
    report("exact CVaR oracle", ok, f"value {val:.6f}, oracle {oracle:.6f}",
           time.perf_counter() - t0, 1.0)


def test_newsvendor_closed_form_and_zero_radius():
    t0 = time.perf_counter()
    cfg = NewsvendorConfig(radius_grid=(0.0,), n_samples=10_000)
    y_cf = newsvendor_closed_form(cfg)
    y0 = float(newsvendor_robust_curve(cfg).column("y_robust")[0])
    ok = abs(y_cf - 4.20) <= 0.01 and abs(y0 - y_cf) <= 0.1
    report("newsvendor closed form", ok, f"closed form {y_cf:.4f}, r=0 optimum {y0:.4f}",
           time.perf_counter() - t0, 30.0)


CVAR_TABLE = {
    "kl": ("<inf", "*", "inf", "inf", "inf"),
    "polynomial>1": ("<inf", "<inf", "<inf", "*", "*"),
    "polynomial<1": ("inf",) * 5,
}
ENTROPIC_TABLE = {
    "kl": ("inf",) * 5,
    "polynomial>1": ("<inf", "*", "inf", "inf", "inf"),
    "polynomial<1": ("inf",) * 5,
}


def test_finiteness_tables():
    t0 = time.perf_counter()
    mismatches, cells = [], 0
    for risk, table in (("cvar", CVAR_TABLE), ("entropic", ENTROPIC_TABLE)):
        got = finiteness_table(risk)
        for row, expected in table.items():
            for col, sym in zip(NOMINAL_COLUMNS, expected):
                cells += 1
                if got[row][col] != sym:
                    mismatches.append((risk, row, col, got[row][col], sym))
    ok = cells == 30 and not mismatches
    report("finiteness tables", ok, f"{cells - len(mismatches)}/{cells} cells match",
           time.perf_counter() - t0, 1.0)


def test_strong_duality_and_toy_contract():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2026)
    worst_gap, worst_cert, missing = 0.0, 0.0, 0
    for i in range(50):
        n = int(rng.integers(3, 6))
        x, w = rng.normal(0, 1, n), rng.dirichlet(np.full(n, 2.0))
        phi1 = ("kl", "polynomial(2)")[i % 2]
        form = ("penalty", "ball")[(i // 2) % 2]
        r = float(rng.uniform(0.05, 0.5)) if form == "ball" else None
        prob = RobustProblem(form, phi1, "kl", radius=r)
        data = SampleSet(x, w)
        sol = solve(prob, data, with_worst_case=True)
        worst_gap = max(worst_gap, abs(sol.value - brute_force_primal(prob, x, w)))
        if sol.worst_case is None:
            missing += 1
            continue
        pv, _ = primal_value(prob, data, *sol.worst_case)
        worst_cert = max(worst_cert, abs(pv - sol.value))

    radii = (0.0, 0.001, 0.003, 0.005, 0.007, 0.01)
    crossed, contract = 0, True
    for seed in range(10):
        tab = toy_pareto_cvar(radii=radii, N=1000, seed=seed)
        vals = tab.column("robust_cvar")
        data = sample("pareto_neg(alpha=2,xm=1)", 1000, seed)
        contract &= abs(vals[0] - empirical_cvar(0.975, data)) < 1e-5
        contract &= bool(np.all(np.diff(vals) > 0))
        crossed += bool(vals[-1] >= EXACT_CVAR)
    ok = worst_gap <= 1e-3 and worst_cert <= 1e-3 and not missing and contract and crossed >= 8
    detail = (f"max |dual - primal| {worst_gap:.2e}, max certificate gap {worst_cert:.2e}, "
              f"{missing} without certificate; toy r=0/monotone {contract}, "
              f"crossing by r=0.01 on {crossed}/10 seeds")
    report("strong duality at desk scale", ok, detail, time.perf_counter() - t0, 120.0)


def test_kl_more_conservative_than_polynomial():
    t0 = time.perf_counter()
    bad_rows, kl_ratios, poly_ratios = 0, [], []
    for seed in range(10):
        plain = divergence_comparison(r=0.02, seed=seed)
        bad_rows += int(np.sum(plain.column("kl") < plain.column("polynomial")))
        weighted = divergence_comparison(r=0.02, seed=seed, use_importance=True)
        k, p = weighted.column("kl"), weighted.column("polynomial")
        kl_ratios.append(k.max() / k.min())
        poly_ratios.append(p.max() / p.min())
    ok = bad_rows == 0 and min(kl_ratios) > 10 and max(poly_ratios) < 2
    detail = (f"{bad_rows} rows with KL < polynomial; importance-sampled max/min: "
              f"KL >= {min(kl_ratios):.1f}, polynomial <= {max(poly_ratios):.2f}")
    report("KL vs polynomial conservatism", ok, detail, time.perf_counter() - t0, 300.0)


@pytest.mark.parametrize("x", [-2.0, -1.0, 1.0])
def test_elicitation_limit(x):
    t0 = time.perf_counter()
    res = elicit_composite(RobustProblem("penalty", "kl", "kl"), x)
    target = math.expm1(math.expm1(-x))
    err = np.abs(res.ratios - target)
    rel = abs(res.ratio_at(2.0**-14) - target) / abs(target)
    monotone = bool(np.all(np.diff(err) < 0))
    ok = rel <= 0.02 and monotone
    detail = (f"x={x:g}: relative error {rel:.3g} at p=2^-14 (target {target:.5f}), "
              f"monotone decay {monotone}")
    report("elicitation limit", ok, detail, time.perf_counter() - t0, 60.0)


def _u_shaped(v):
    return v[0] > v.min() and v[-1] > v.min()


def test_hedging_study():
    t0 = time.perf_counter()
    good, argmins = 0, []
    for seed in range(10):
        tab = hedging_study(HedgingConfig(paths=2000, seed=seed))
        n, nom, rob = tab.column("n"), tab.column("nominal_cvar"), tab.column("robust_cvar")
        a_nom, a_rob = int(n[np.argmin(nom)]), int(n[np.argmin(rob)])
        argmins.append((a_nom, a_rob))
        good += bool(_u_shaped(nom) and _u_shaped(rob) and np.all(rob >= nom)
                     and a_rob >= a_nom and 25 <= a_nom <= 400 and 25 <= a_rob <= 400)
    ok = good >= 8
    report("hedging study", ok, f"{good}/10 seeds satisfy the shape contract; argmins {argmins}",
           time.perf_counter() - t0, 600.0)


CONSTRUCTED = ["gl-cvar(0.3,2,2)", "gl-cvar(1,2,2)", "weibull-power(2,2)",
               "weibull-power(0.5,3)", "entropic-weibull(1,1,3)"]


def _built():
    out = {name: get_divergence(name) for name in CONSTRUCTED}
    # exp(s) + s^2 normalised to a tail with unit slope and curvature at 0
    out["tail(exp+square)"] = construct_from_tail(
        TailSpec(lambda s: math.exp(s) + s * s, 1.0, 3.0, 1.0, lambda s: math.exp(s) + 2 * s))
    return out


def _biconjugate(phi, t):
    f = lambda s: -(s * t - float(eval_conjugate(phi, s)))
    grid = np.concatenate([np.linspace(-60.0, 0.0, 200), np.geomspace(1e-6, 1e6, 1500)])
    vals = np.array([f(v) for v in grid])
    j = int(np.argmin(vals))
    res = optimize.minimize_scalar(f, bounds=(grid[max(j - 1, 0)], grid[j + 1]),
                                   method="bounded", options={"xatol": 1e-12})
    return -min(res.fun, vals[j])


def test_conjugate_property_suite():
    t0 = time.perf_counter()
    failures = []
    s_grid = np.array([-4.0, -1.0, -0.2, 0.3, 1.0, 2.5])
    t_grid = np.array([0.0, 0.4, 1.0, 3.0, 20.0])
    for name, phi in _built().items():
        if abs(float(eval_conjugate(phi, 0.0))) > 1e-12:
            failures.append(f"{name}: phi*(0)")
        if abs(float(eval_conjugate_deriv(phi, 0.0)) - 1.0) > 1e-10:
            failures.append(f"{name}: phi*'(0)")
        for s in s_grid:
            for t in t_grid:
                lhs = float(eval_phi(phi, t)) + float(eval_conjugate(phi, s))
                if lhs < s * t - 1e-8 * max(1.0, abs(lhs)):
                    failures.append(f"{name}: Fenchel-Young at ({s}, {t})")
            h = 1e-6 * max(1.0, abs(s))
            fd = (float(eval_conjugate(phi, s + h)) - float(eval_conjugate(phi, s - h))) / (2 * h)
            if abs(float(eval_conjugate_deriv(phi, s)) - fd) > 1e-4 * max(1.0, abs(fd)):
                failures.append(f"{name}: subgradient at {s}")
        for t in (0.3, 1.0, 2.5, 40.0):
            if abs(float(eval_phi(phi, t)) - _biconjugate(phi, t)) > 1e-7 * max(1.0, t):
                failures.append(f"{name}: biconjugate at {t}")

    moments = []

    def truncated_gaussian(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= -1.0, stats.norm.pdf(x + 1.0) / 0.5, 0.0)

    def pareto_tail(a):
        return lambda x: np.where(np.asarray(x) <= -1.0,
                                  a * np.abs(np.minimum(x, -1.0)) ** (-a - 1.0), 0.0)

    # generalised-lognormal tailored ball: lighter tails inside, heavy Pareto outside
    gl = ("gl-cvar(0.5,2,2)", "gln_neg(sigma=0.5,p=2)", 2)
    moments.append(moment_content_check(*gl, truncated_gaussian) == "Inside")
    moments.append(moment_content_check(*gl, pareto_tail(3.0)) == "Inside")
    moments.append(moment_content_check(*gl, pareto_tail(1.5)) == "Outside")
    # Weibull power ball
    wp = ("weibull-power(2,2)", "weibull_neg(k=2,lambda=1)", 2)
    moments.append(moment_content_check(*wp, truncated_gaussian) == "Inside")
    moments.append(moment_content_check(*wp, pareto_tail(1.5)) == "Outside")
    # entropic Weibull ball: Weibull shapes above one inside, below one outside
    ew = ("entropic-weibull(1,1,3)", "weibull_neg(k=3,lambda=1)", 2)
    for k, expected in ((2.0, "Inside"), (1.5, "Inside"), (1.2, "Inside"), (0.8, "Outside")):
        moments.append(moment_content_check(*ew, f"weibull_neg(k={k},lambda=1)") == expected)
    failures += [f"moment check {i}" for i, m in enumerate(moments) if not m]
    ok = not failures
    report("conjugate/construction properties", ok,
           f"{len(_built())} divergences, {len(moments)} moment checks; failures: {failures}",
           time.perf_counter() - t0, 120.0)


def test_saa_consistency_smoke():
    t0 = time.perf_counter()
    prob = RobustProblem("ball", "kl", "kl", radius=0.1)
    good, seqs = 0, []
    for seed in range(10):
        v = [solve(prob, sample("gaussian", n, seed)).value for n in (1_000, 10_000, 100_000)]
        seqs.append(tuple(round(x, 3) for x in v))
        good += abs(v[1] - v[2]) < abs(v[0] - v[1])
    ok = good >= 8
    report("SAA consistency smoke", ok, f"{good}/10 seeds shrink; values {seqs}",
           time.perf_counter() - t0, 300.0)
