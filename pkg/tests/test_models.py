import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from robustrisk.errors import DomainError, ParamError, SupportError
from robustrisk.models import SampleSet, get_model, importance_sample, quantile, sample


def test_sample_is_deterministic_in_seed_and_stream():
    m = get_model("pareto_neg(alpha=2,xm=1)")
    a, b = sample(m, 50, seed=7), sample(m, 50, seed=7)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, sample(m, 50, seed=8).values)
    assert not np.array_equal(a.values, sample(m, 50, seed=7, stream=1).values)
    assert np.all(a.values <= -1.0)
    assert np.allclose(a.weights, 1 / 50)


def test_pareto_negative_density_and_quantile():
    m = get_model("pareto_neg(alpha=2,xm=1)")
    assert m.density(-2.0) == pytest.approx(2 / 8)
    assert m.density(-0.5) == 0.0
    # P(X <= x) = |x|^-2 for x <= -1
    assert quantile(m, 0.25) == pytest.approx(-2.0)
    assert m.cdf(-2.0) == pytest.approx(0.25)


def test_quantile_bisection_agrees_with_closed_form():
    for spec in ("gaussian(mu=1,sigma=2)", "weibull_neg(k=0.7)", "gln_neg(sigma=0.5,p=3)",
                 "student_t(nu=4)"):
        m = get_model(spec)
        for u in (0.01, 0.3, 0.9):
            assert quantile(m, u, method="bisection") == pytest.approx(quantile(m, u), abs=1e-8)


def test_quantile_vectorised():
    m = get_model("lognormal(mu=0,sigma=1)")
    u = np.array([0.1, 0.5, 0.99])
    assert np.allclose(quantile(m, u), [quantile(m, v) for v in u])


def test_quantile_domain():
    with pytest.raises(DomainError):
        quantile(get_model("gaussian"), 1.0)
    with pytest.raises(DomainError):
        quantile(get_model("gaussian"), np.array([0.2, 0.0]))


@pytest.mark.parametrize("spec", ["gln_neg(sigma=1,p=2)", "gln_neg(mu=0.4,sigma=0.3,p=2)",
                                  "gln_neg(sigma=0.7,p=4)"])
def test_generalised_lognormal_integrates_to_one(spec):
    m = get_model(spec)
    mass, _ = integrate.quad(lambda y: m.density(-math.exp(y)) * math.exp(y), -40, 40,
                             limit=400)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_generalised_lognormal_p2_matches_lognormal():
    g = get_model("gln_neg(mu=0.2,sigma=0.8,p=2)")
    ln = get_model("lognormal(mu=0.2,sigma=0.8)")
    for x in (0.3, 1.0, 4.0):
        assert g.density(-x) == pytest.approx(ln.density(x), rel=1e-10)


def test_reflect_mirrors_support():
    m = get_model("lognormal(mu=0,sigma=1)", reflect=True)
    assert m.support == (-math.inf, 0.0)
    assert m.density(-1.0) == pytest.approx(get_model("lognormal").density(1.0))
    assert np.all(sample(m, 20, 0).values < 0)


def test_importance_sample_weights_are_likelihood_ratios():
    m, prop = get_model("pareto_neg(alpha=2)"), get_model("pareto_neg(alpha=1)")
    data = importance_sample(m, prop, 200, seed=3)
    ratio = 2.0 / np.abs(data.values)
    assert np.allclose(data.weights, ratio / ratio.sum())


def test_importance_sample_support_error():
    with pytest.raises(SupportError):
        importance_sample(get_model("pareto_neg(alpha=2)"), get_model("lognormal"), 10, 0)


def test_sample_set_validation():
    with pytest.raises(ParamError):
        SampleSet(np.array([]))
    with pytest.raises(ParamError):
        SampleSet(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ParamError):
        SampleSet(np.array([1.0]), np.array([-1.0]))
    s = SampleSet(np.array([1.0, 3.0]), np.array([1.0, 3.0]))
    assert s.weights.sum() == pytest.approx(1.0)
    assert s.mean() == pytest.approx(2.5)


def test_model_spec_errors():
    with pytest.raises(ParamError):
        get_model("cauchy(1)")
    with pytest.raises(ParamError):
        get_model("gaussian(sigma=-1)")


@settings(max_examples=40, deadline=None)
@given(u=st.floats(0.001, 0.999), alpha=st.floats(0.5, 5.0))
def test_cdf_inverts_quantile(u, alpha):
    m = get_model(f"pareto_neg(alpha={alpha!r})")
    assert m.cdf(quantile(m, u)) == pytest.approx(u, abs=1e-9)
