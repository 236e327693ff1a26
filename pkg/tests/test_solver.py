import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from robustrisk.divergences import eval_conjugate, get_divergence
from robustrisk.errors import DegenerateError, FallbackWarning, ParamError
from robustrisk.models import SampleSet, sample
from robustrisk.risk import empirical_cvar, nominal_oce
from robustrisk.solver import (
    RobustProblem,
    SolverOptions,
    brute_force_primal,
    compactness_bounds,
    dual_objective,
    primal_value,
    solve,
    worst_case_density,
)


@pytest.fixture(scope="module")
def pareto():
    return sample("pareto_neg(alpha=2,xm=1)", 1000, seed=0)


def small(seed, n=4):
    rng = np.random.default_rng(seed)
    return SampleSet(rng.normal(0, 1, n), rng.dirichlet(np.full(n, 2.0)))


def kl_kl_penalty_oracle(data):
    # inf over t1 is explicit: -t2 + log E exp(e^{t2 - X} - 1)
    x, w = data.values, data.weights
    f = lambda t2: -t2 + math.log(np.dot(w, np.exp(np.expm1(t2 - x))))
    res = optimize.minimize_scalar(f, bounds=(-x.max() - 5, -x.min() + 5), method="bounded",
                                   options={"xatol": 1e-12})
    return res.fun


def test_problem_validation():
    with pytest.raises(ParamError):
        RobustProblem("ball", "kl", "kl")
    with pytest.raises(ParamError):
        RobustProblem("penalty", "kl", "kl", radius=0.1)
    with pytest.raises(ParamError):
        RobustProblem("globalized", "kl", "kl", radius=0.1)
    with pytest.raises(ParamError):
        RobustProblem("ball", "kl", "kl", radius=-1.0)
    with pytest.raises(ParamError):
        RobustProblem("wedge", "kl", "kl")


def test_penalty_objective_at_origin():
    data = small(1)
    phi = get_divergence("kl")
    val, _ = dual_objective(RobustProblem("penalty", phi, phi), data, [0.0, 0.0])
    expected = np.dot(data.weights, eval_conjugate(phi, eval_conjugate(phi, -data.values)))
    assert val == pytest.approx(expected, rel=1e-12)


def test_ball_objective_lambda_zero_convention():
    data = SampleSet(np.array([-1.0, 0.5, 2.0]))
    prob = RobustProblem("ball", "kl", "kl", radius=0.1)
    # t2 = min X, t1 = 0: phi1*(t2 - X) <= 0 everywhere
    assert dual_objective(prob, data, [0.0, -1.0, 0.0])[0] == pytest.approx(1.0)
    assert dual_objective(prob, data, [0.5, -1.0, 0.0])[0] == math.inf


def test_subgradient_matches_central_differences():
    rng = np.random.default_rng(5)
    data = small(3, 5)
    prob = RobustProblem("ball", "kl", "kl", radius=0.2)
    checked = 0
    for _ in range(100):
        p = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 3)])
        val, grad = dual_objective(prob, data, p)
        if not math.isfinite(val):
            continue
        fd = np.array([(dual_objective(prob, data, p + h)[0] - dual_objective(prob, data, p - h)[0])
                       / 2e-6 for h in np.eye(3) * 1e-6])
        assert np.allclose(grad, fd, atol=1e-4, rtol=1e-4)
        checked += 1
    assert checked > 50


def test_kl_kl_penalty_matches_closed_form():
    for seed in range(5):
        data = small(seed)
        sol = solve(RobustProblem("penalty", "kl", "kl"), data)
        assert sol.value == pytest.approx(kl_kl_penalty_oracle(data), abs=1e-6)


def test_penalty_with_degenerate_phi2_is_nominal():
    data = small(7, 5)
    sol = solve(RobustProblem("penalty", "kl", "degenerate"), data)
    assert sol.value == pytest.approx(nominal_oce("entropic", data), abs=1e-10)


def test_ball_zero_radius_is_empirical_cvar(pareto):
    sol = solve(RobustProblem("ball", "cvar(0.975)", "polynomial(3)", radius=0.0), pareto,
                with_worst_case=True)
    assert sol.value == pytest.approx(empirical_cvar(0.975, pareto), abs=1e-5)
    assert np.allclose(sol.worst_case[0], pareto.weights, atol=1e-6)


def test_ball_monotone_in_radius_and_dominates_nominal(pareto):
    radii = (0.0, 0.001, 0.003, 0.005, 0.01, 0.03, 0.1)
    vals = [solve(RobustProblem("ball", "cvar(0.975)", "polynomial(3)", radius=r), pareto).value
            for r in radii]
    assert np.all(np.diff(vals) > 0)
    assert vals[0] == pytest.approx(empirical_cvar(0.975, pareto), abs=1e-5)


def test_kl_ball_more_conservative_than_polynomial(pareto):
    kl = solve(RobustProblem("ball", "cvar(0.975)", "kl", radius=0.02), pareto).value
    poly = solve(RobustProblem("ball", "cvar(0.975)", "polynomial(3)", radius=0.02), pareto).value
    assert kl > poly


def test_divergence_dominance():
    # kl(2) = kl / 2 pointwise: the kl(2) ball is larger
    data = small(11, 5)
    a = solve(RobustProblem("ball", "kl", "kl(2)", radius=0.2), data).value
    b = solve(RobustProblem("ball", "kl", "kl", radius=0.2), data).value
    assert a >= b - 1e-6


def test_constant_data():
    data = SampleSet(np.full(4, 1.5))
    for prob in (RobustProblem("penalty", "kl", "kl"),
                 RobustProblem("ball", "polynomial(2)", "kl", radius=0.3)):
        assert solve(prob, data).value == pytest.approx(-1.5, abs=1e-6)
        assert brute_force_primal(prob, data.values) == pytest.approx(-1.5, abs=1e-6)
    box = compactness_bounds(RobustProblem("penalty", "kl", "kl"), SampleSet(np.zeros(3)))
    assert box.contains([0.0, 0.0])


def test_box_contains_optimum_and_shrinks_with_radius():
    data = small(2, 5)
    prob = RobustProblem("ball", "kl", "kl", radius=0.3)
    sol = solve(prob, data)
    assert sol.box.contains(sol.point)
    big = compactness_bounds(RobustProblem("ball", "kl", "kl", radius=1e3), data)
    assert big.lambda_max < compactness_bounds(prob, data).lambda_max
    assert big.lambda_max < 1e-2


def test_fallback_box_warns_without_finite_points():
    with pytest.warns(FallbackWarning):
        box = compactness_bounds(RobustProblem("ball", "kl", "degenerate", radius=0.1), small(0))
    assert box.fallback


def test_lambda_zero_branch_wins_for_huge_radius():
    data = SampleSet(np.array([-2.0, 0.0, 1.0]))
    sol = solve(RobustProblem("ball", "cvar(0.5)", "tv", radius=10.0), data)
    assert sol.value == pytest.approx(2.0, abs=1e-6)


def test_infinite_objective_returns_cut():
    # polynomial(0.5) has phi2* = +inf beyond 2
    data = SampleSet(np.array([-3.0, 0.0]))
    prob = RobustProblem("penalty", "kl", "polynomial(0.5)")
    val, cut = dual_objective(prob, data, [0.0, 0.0])
    assert val == math.inf
    h, g = cut
    assert h > 0 and g[0] > 0
    assert math.isfinite(solve(prob, data).value)


def test_worst_case_kl_penalty_is_exponential_tilt():
    data = small(4, 5)
    prob = RobustProblem("penalty", "kl", "kl")
    sol = solve(prob, data, with_worst_case=True)
    g, gbar = sol.worst_case
    tilt = data.weights * np.exp(np.expm1(sol.theta[1] - data.values))
    assert np.allclose(g, tilt / tilt.sum(), atol=1e-6)
    pv, _ = primal_value(prob, data, g, gbar)
    assert pv == pytest.approx(sol.value, abs=1e-4)


def test_worst_case_degenerate_at_lambda_floor():
    data = SampleSet(np.array([-2.0, 0.0, 1.0]))
    prob = RobustProblem("ball", "kl", "kl", radius=1.0)
    sol = solve(prob, data)
    sol.lam = 1e-12
    with pytest.raises(DegenerateError):
        worst_case_density(prob, data, sol)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), r=st.floats(0.05, 1.0))
def test_weak_duality(seed, r):
    data = small(seed, 3)
    prob = RobustProblem("ball", "kl", "kl", radius=r)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bf = brute_force_primal(prob, data.values, data.weights, starts=4)
    assert bf <= solve(prob, data).value + 1e-4


def test_brute_force_limits():
    with pytest.raises(ParamError):
        brute_force_primal(RobustProblem("penalty", "kl", "kl"), np.zeros(7))
    data = small(8)
    prob = RobustProblem("ball", "kl", "kl", radius=0.0)
    assert brute_force_primal(prob, data.values, data.weights) == pytest.approx(
        nominal_oce("entropic", data), abs=1e-10)


def test_shortfall_dominates_oce():
    data = small(9, 5)
    for r in (0.05, 0.3):
        oce = solve(RobustProblem("ball", "kl", "kl", radius=r), data).value
        sf = solve(RobustProblem("shortfall-ball", "kl", "kl", radius=r), data).value
        assert sf >= oce - 1e-6
    oce = solve(RobustProblem("penalty", "kl", "kl"), data).value
    sf = solve(RobustProblem("shortfall-penalty", "kl", "kl"), data).value
    assert sf >= oce - 1e-6


def test_globalized_reduces_to_ball_with_degenerate_inner():
    data = small(12, 4)
    ball = solve(RobustProblem("ball", "kl", "kl", radius=0.2), data).value
    glob = solve(RobustProblem("globalized", "kl", "degenerate", "kl", radius=0.2), data,
                 SolverOptions(tol=1e-8)).value
    assert glob == pytest.approx(ball, abs=1e-4)


def test_certified_gap_under_perturbed_boxes():
    data = small(13, 5)
    prob = RobustProblem("ball", "kl", "kl", radius=0.4)
    a = solve(prob, data)
    b = solve(prob, data, SolverOptions(box_pad=5.0))
    assert abs(a.value - b.value) <= 2 * max(a.certified_gap, b.certified_gap) + 1e-9


def test_solution_record():
    sol = solve(RobustProblem("ball", "kl", "kl", radius=0.1), small(0))
    rec = sol.as_record()
    assert set(rec) >= {"theta1", "theta2", "lambda", "value", "iterations", "gap"}
