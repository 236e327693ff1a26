import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from robustrisk.divergences import (
    TailSpec,
    construct_from_tail,
    divergence_value,
    eval_conjugate,
    eval_conjugate_deriv,
    eval_phi,
    get_divergence,
    make_tailored,
    perspective_conjugate,
)
from robustrisk.errors import ConstructionError, DomainError, ParamError
from robustrisk.models import get_model

CATALOG = ["kl", "kl(2)", "chi2", "modified-chi2", "burg", "tv", "polynomial(3)",
           "polynomial(0.5)", "polynomial(1.5)", "cvar(0.9)"]
TAILORED = ["gl-cvar(0.3,2,2)", "gl-cvar(1,2,2)", "weibull-power(2,2)", "weibull-power(0.5,3)",
            "entropic-weibull(1,1,3)"]


def brute_conjugate(phi, s, hi=60.0):
    """sup_t s t - phi(t) by bounded scalar search; independent of the catalog formulas."""
    f = lambda t: -(s * t - float(eval_phi(phi, t)))
    grid = np.linspace(0.0, hi, 601)
    vals = [f(t) for t in grid]
    j = int(np.argmin(vals))
    lo, up = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(f, bounds=(lo, up), method="bounded",
                                   options={"xatol": 1e-12})
    return -min(res.fun, vals[j])


@pytest.mark.parametrize("name", ["kl", "chi2", "modified-chi2", "burg", "polynomial(3)",
                                  "polynomial(0.5)"])
@pytest.mark.parametrize("s", [-1.5, -0.3, 0.0, 0.2, 0.6])
def test_conjugate_matches_brute_force(name, s):
    phi = get_divergence(name)
    assert eval_conjugate(phi, s) == pytest.approx(brute_conjugate(phi, s), abs=1e-7)


def test_kl_closed_forms():
    phi = get_divergence("kl")
    assert eval_phi(phi, 2.0) == pytest.approx(2 * math.log(2) - 1)
    assert eval_phi(phi, 0.0) == 1.0
    assert eval_phi(phi, -1.0) == math.inf
    assert eval_conjugate(phi, 1.0) == pytest.approx(math.e - 1)


def test_vectorised_and_scalar_agree():
    phi = get_divergence("gl-cvar(0.3,2,2)")
    s = np.array([-3.0, 0.0, 0.4, 7.0, 80.0])
    vec = eval_conjugate(phi, s)
    assert np.allclose(vec, [eval_conjugate(phi, float(v)) for v in s], rtol=1e-13)


def test_overflow_reported_as_infinity():
    assert eval_conjugate(get_divergence("kl"), 800.0) == math.inf
    assert eval_conjugate(get_divergence("gl-cvar(0.3,2,2)"), 1e40) == math.inf


def test_conjugate_deriv_domain_error():
    with pytest.raises(DomainError):
        eval_conjugate_deriv(get_divergence("chi2"), 1.0)
    with pytest.raises(DomainError):
        eval_conjugate_deriv(get_divergence("burg"), 2.0)


def test_perspective_zero_lambda_convention():
    phi = get_divergence("kl")
    assert perspective_conjugate(phi, -2.0, 0.0) == 0.0
    assert perspective_conjugate(phi, 0.0, 0.0) == 0.0
    assert perspective_conjugate(phi, 1e-9, 0.0) == math.inf
    assert perspective_conjugate(phi, 1.0, 2.0) == pytest.approx(2 * (math.exp(0.5) - 1))
    with pytest.raises(DomainError):
        perspective_conjugate(phi, 1.0, -1.0)


@pytest.mark.parametrize("name", CATALOG + TAILORED)
def test_normalisation_at_zero(name):
    phi = get_divergence(name)
    assert eval_conjugate(phi, 0.0) == pytest.approx(0.0, abs=1e-12)
    if name.startswith(("cvar", "tv")):
        return
    assert eval_conjugate_deriv(phi, 0.0) == pytest.approx(1.0, abs=1e-10)
    assert eval_phi(phi, 1.0) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("name", TAILORED)
def test_tailored_second_derivative_and_smoothness(name):
    phi = get_divergence(name)
    h = 1e-4
    d2 = (eval_conjugate(phi, h) - 2 * eval_conjugate(phi, 0.0) + eval_conjugate(phi, -h)) / h**2
    assert d2 == pytest.approx(1.0, abs=1e-3)
    # derivative continuous across the junction at 0
    left = (eval_conjugate(phi, -1e-7) - eval_conjugate(phi, -2e-7)) / 1e-7
    right = (eval_conjugate(phi, 2e-7) - eval_conjugate(phi, 1e-7)) / 1e-7
    assert left == pytest.approx(right, abs=1e-5)


@pytest.mark.parametrize("name", TAILORED + ["kl", "polynomial(3)"])
@pytest.mark.parametrize("s", [-2.0, -0.2, 0.3, 1.5, 4.0])
def test_subgradient_matches_finite_difference(name, s):
    phi = get_divergence(name)
    h = 1e-6 * max(1.0, abs(s))
    fd = (eval_conjugate(phi, s + h) - eval_conjugate(phi, s - h)) / (2 * h)
    an = eval_conjugate_deriv(phi, s)
    assert an == pytest.approx(fd, rel=1e-4, abs=1e-4)


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(CATALOG + TAILORED),
       t=st.floats(0.0, 30.0), s=st.floats(-5.0, 3.0))
def test_fenchel_young(name, t, s):
    phi = get_divergence(name)
    ps, ct = eval_phi(phi, t), eval_conjugate(phi, s)
    if math.isinf(ps) or math.isinf(ct):
        return
    assert ps + ct >= s * t - 1e-8 * max(1.0, abs(s * t), abs(ps), abs(ct))


@pytest.mark.parametrize("name", TAILORED)
@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5, 40.0, 1e5])
def test_biconjugation(name, t):
    phi = get_divergence(name)
    # phi(t) = sup_s s t - phi*(s); the maximiser solves phi*'(s) = t
    f = lambda s: -(s * t - eval_conjugate(phi, s))
    grid = np.concatenate([np.linspace(-60.0, 0.0, 200), np.geomspace(1e-6, 1e8, 2000)])
    vals = np.array([f(v) for v in grid])
    j = int(np.argmin(vals))
    res = optimize.minimize_scalar(f, bounds=(grid[max(j - 1, 0)], grid[j + 1]),
                                   method="bounded", options={"xatol": 1e-12})
    expected = -min(res.fun, vals[j]) if t > 0 else 1.0
    assert eval_phi(phi, t) == pytest.approx(expected, rel=1e-7, abs=1e-8)


def test_tailored_constants_documented_shape():
    phi = make_tailored("gl_cvar", {"sigma": 0.3, "p": 2, "d": 2})
    c = phi.constants
    a = 1.0 / (2 * 0.6**2)
    assert c["a"] == pytest.approx(a)
    assert c["c1"] == pytest.approx(1.0 / (4 * (a * a + a) * math.exp(a - 1)))
    assert c["c2"] == pytest.approx(1 - c["c1"] * math.exp(a) * (2 * a + 1))


def test_tailored_parameter_checks():
    with pytest.raises(ParamError):
        make_tailored("gl_cvar", {"sigma": 0.3, "p": 1.5, "d": 2})
    with pytest.raises(ParamError):
        make_tailored("entropic_weibull", {"gamma": 1, "lambda": 1, "k": 0.8})
    with pytest.raises(ParamError):
        get_divergence("nonsense(1)")


def test_construct_from_tail_matches_kl():
    # psi(s) = e^s reproduces the KL conjugate e^s - 1 on s >= 0
    spec = TailSpec(math.exp, 1.0, 1.0, 1.0, math.exp)
    phi = construct_from_tail(spec)
    for s in (-1.0, 0.0, 0.5, 3.0):
        assert eval_conjugate(phi, s) == pytest.approx(math.expm1(s), rel=1e-12)
    assert eval_phi(phi, 3.0) == pytest.approx(3 * math.log(3) - 2, rel=1e-9)


def test_construct_from_tail_rejects_concave():
    with pytest.raises(ConstructionError):
        construct_from_tail(TailSpec(lambda s: -s * s, 0.0, -2.0, 0.0))
    with pytest.raises(ConstructionError):
        construct_from_tail(TailSpec(lambda s: s, 1.0, 0.0, 0.0))
    # convex at 0 but bends over further out
    with pytest.raises(ConstructionError):
        construct_from_tail(TailSpec(lambda s: s * s / 2 - s**4 / 24, 0.0, 1.0, 0.0))


def test_divergence_value_gaussian_kl_oracle():
    # KL(N(m,1) || N(0,1)) = m^2 / 2
    g = get_model("gaussian(mu=0.7,sigma=1)")
    f = get_model("gaussian(mu=0,sigma=1)")
    val = divergence_value(get_divergence("kl"), g, f, f.support)
    assert val == pytest.approx(0.245, rel=1e-6)


def test_divergence_value_chi2_oracle():
    # modified chi^2 between N(m,1) and N(0,1): e^{m^2} - 1
    g = get_model("gaussian(mu=0.5,sigma=1)")
    f = get_model("gaussian")
    val = divergence_value(get_divergence("modified-chi2"), g, f, f.support)
    assert val == pytest.approx(math.expm1(0.25), rel=1e-6)


def test_divergence_value_same_density_is_zero():
    f = get_model("weibull_neg(k=1.5)")
    assert divergence_value(get_divergence("polynomial(3)"), f, f, f.support) == pytest.approx(
        0.0, abs=1e-10)


def test_divergence_value_heavier_tail_infinite_for_polynomial():
    # a heavier Weibull sits outside every polynomial ball around a lighter one
    g, f = get_model("weibull_neg(k=1)"), get_model("weibull_neg(k=2)")
    assert divergence_value(get_divergence("polynomial(2)"), g, f, f.support) == math.inf


def test_construct_from_tail_overflow_is_infinite():
    spec = TailSpec(lambda s: math.exp(s) + s * s, 1.0, 3.0, 1.0, lambda s: math.exp(s) + 2 * s)
    phi = construct_from_tail(spec)
    assert eval_conjugate(phi, 1e4) == math.inf
    assert eval_conjugate(phi, 2.0) == pytest.approx((math.exp(2) + 4 + 4 - 1) / 3)
