import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from netrisk import exact, model, poisson
from netrisk.model import Compensated, Dependence, ScenarioError
from netrisk.poisson import ConvergenceError, Shift


def test_plus_one_minus_one_closed_form():
    for lam in (0.1, 1.0, 7.5):
        assert poisson.poisson_moment(lam, -1.0) == pytest.approx(-math.expm1(-lam) / lam, rel=1e-12)


def test_plain_first_moment_is_lambda():
    assert poisson.poisson_moment(3.2, 1.0, Shift.NONE) == pytest.approx(3.2, rel=1e-12)


def test_lambda_zero():
    assert poisson.poisson_moment(0.0, -2.0) == 1.0
    assert poisson.poisson_moment(0.0, 2.0, Shift.NONE) == 0.0


def test_negative_exponent_without_shift_diverges():
    with pytest.raises(ConvergenceError):
        poisson.poisson_moment(1.0, -0.5, Shift.NONE)


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_bad_lambda(bad):
    with pytest.raises(ValueError):
        poisson.poisson_moment(bad, 1.0)


def test_truncation_grows_for_large_lambda():
    terms = poisson.poisson_terms(500.0, 2.0, Shift.NONE)
    assert terms.size > 500
    assert math.fsum(terms) == pytest.approx(500.0 + 500.0 ** 2, rel=1e-12)


@given(st.floats(0.0, 50.0), st.floats(-3.0, 3.0))
def test_matches_scipy_reference(lam, k):
    n = np.arange(2000)
    ref = math.fsum(stats.poisson.pmf(n, lam) * (1.0 + n) ** k)
    assert poisson.poisson_moment(lam, k) == pytest.approx(ref, rel=1e-10, abs=1e-12)


@given(st.floats(0.0, 20.0), st.floats(0.0, 20.0), st.floats(0.1, 3.0))
def test_decreasing_in_lambda_for_negative_exponent(l1, l2, k):
    lo, hi = sorted((l1, l2))
    assert poisson.poisson_moment(hi, -k) <= poisson.poisson_moment(lo, -k) + 1e-12


def test_worked_count_example():
    lam, bound = poisson.noninsured_count_approx(model.homogeneous(3, 2, 0.5, 2.0))
    assert lam == pytest.approx(0.25)
    assert bound == pytest.approx(0.03125)


def test_systemic_approximation_formula():
    s = model.homogeneous(4, 3, 0.2, 2.0)
    ap = poisson.approx_systemic_constant(s)
    assert ap.value == pytest.approx(3 * -math.expm1(-0.8), rel=1e-14)
    assert ap.bound == pytest.approx(3 * 4 * 0.04, rel=1e-14)


def test_approximations_need_proportional_weights():
    s = model.homogeneous(3, 3, 0.1, 2.0, weights=Compensated(2.0), norm=model.AggregationNorm(2.0))
    with pytest.raises(ScenarioError):
        poisson.approx_individual_constant(s, 0)
    with pytest.raises(ScenarioError):
        poisson.approx_systemic_constant(s)


def sparse(rng):
    q, d = int(rng.integers(2, 9)), int(rng.integers(1, 6))
    return model.explicit(rng.uniform(0, 0.2, (q, d)), float(rng.choice([0.5, 1.0, 2.0])), rng.uniform(0.5, 2.0, d))


def test_individual_and_systemic_bounds_hold():
    rng = np.random.default_rng(11)
    for _ in range(40):
        s = sparse(rng)
        for i in range(s.q):
            assert poisson.approx_individual_constant(s, i).covers(exact.individual_constant_ind(s, i))
        assert poisson.approx_systemic_constant(s).covers(exact.systemic_constant_ind(s))


def test_dependent_bounds_hold():
    rng = np.random.default_rng(12)
    for _ in range(30):
        s = sparse(rng).with_dependence(Dependence.DEPENDENT)
        ind, sys_ = poisson.approx_dep_constants(s)
        assert sys_.covers(exact.systemic_constant_dep(s))
        for i, ap in enumerate(ind):
            assert ap.covers(exact.individual_constant_dep(s, i))


def test_count_and_indicator_tv_within_bound():
    rng = np.random.default_rng(13)
    for _ in range(30):
        s = model.explicit(rng.uniform(0, 0.9, (int(rng.integers(1, 4)), int(rng.integers(1, 8)))), 2.0)
        pi = np.prod(1 - s.P, axis=0)
        assert poisson.indicator_vector_tv(s) <= math.fsum(pi ** 2) + 1e-14
        lam, bound = poisson.noninsured_count_approx(s)
        assert poisson.noninsured_count_tv(s) <= bound + 1e-14


def test_uninsured_matches_exact_difference_at_alpha_two():
    # E X^2 - E Y^2 for Bernoulli(pi) vs Poisson(pi) is exactly pi^2.
    s = model.homogeneous(2, 3, 0.4, 2.0)
    ind, _ = poisson.uninsured_poisson(s)
    assert ind.value - exact.uninsured_constant_ind(s) == pytest.approx(ind.bound, rel=1e-12)


def test_uninsured_constant_bound_holds_for_alpha_at_most_one():
    rng = np.random.default_rng(14)
    for _ in range(30):
        s = model.explicit(rng.uniform(0, 0.6, (3, 4)), float(rng.choice([0.5, 0.8, 1.0])))
        ind, dep = poisson.uninsured_poisson(s)
        assert ind.covers(exact.uninsured_constant_ind(s))
        assert dep.covers(exact.uninsured_constant_dep(s.with_dependence(Dependence.DEPENDENT)))


def test_unequal_scales_use_the_sum_law():
    s = model.explicit([[0.3, 0.5]], 1.0, [1.0, 4.0])
    _, dep = poisson.uninsured_poisson(s)
    # alpha = 1: E sum c_j X_j = sum c_j pi_j
    assert dep.value == pytest.approx(0.7 * 1.0 + 0.5 * 4.0, rel=1e-9)


def test_degree_tv_zero_for_certain_absence():
    assert poisson.degree_tv([0.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
