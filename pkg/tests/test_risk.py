import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netrisk import exact, model, risk
from netrisk.model import Dependence
from netrisk.risk import InfiniteMeanError, RiskKind, Verdict


def test_var_scaling():
    assert risk.var_asymptotic(8.0, 3.0, 1e-3) == pytest.approx(2.0 * 10.0, rel=1e-12)


def test_cote_ratio():
    assert risk.cote_asymptotic(1.0, 3.0, 1e-3) == pytest.approx(15.0, rel=1e-12)


def test_cote_needs_finite_mean():
    with pytest.raises(InfiniteMeanError):
        risk.cote_asymptotic(1.0, 1.0, 0.01)


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1, 2.0])
def test_gamma_range(gamma):
    with pytest.raises(ValueError):
        risk.var_asymptotic(1.0, 2.0, gamma)


@given(st.floats(1e-6, 0.5), st.floats(1e-6, 0.5), st.floats(0.3, 5.0))
def test_var_decreasing_in_gamma(g1, g2, a):
    lo, hi = sorted((g1, g2))
    assert risk.var_asymptotic(2.0, a, hi) <= risk.var_asymptotic(2.0, a, lo)


def test_curve_is_labelled_asymptotic():
    c = risk.RiskMeasureCurve.build("CoTE", 2.0, 2.0, [0.1, 0.01])
    assert c.kind is RiskKind.COTE and c.label == "asymptotic approximation"
    np.testing.assert_allclose(c.values, 2.0 * np.sqrt(2.0) * np.array([0.1, 0.01]) ** -0.5)


def test_toy_diversification_formula():
    b, a = 0.4, 2.0
    c1 = 1 + b * (2 ** (1 - a) - 1) + b ** 2 * (2 ** (1 - a) - 1) + b ** 3 * (3 ** (1 - a) + 1 - 2 ** (2 - a))
    expected = 1 - 3 ** (1 / a) / (3 * c1 ** (1 / a))
    assert risk.diversification_benefit(model.toy(b, a)) == pytest.approx(expected, abs=1e-12)


def test_diversification_ignores_dependence_flag():
    s = model.homogeneous(3, 3, 0.5, 2.0)
    assert risk.diversification_benefit(s) == risk.diversification_benefit(s.with_dependence(Dependence.DEPENDENT))


def test_diversification_needs_one_norm():
    with pytest.raises(ValueError):
        risk.diversification_benefit(model.toy(0.5, 2.0, norm=model.AggregationNorm(2.0)))


def test_diversification_undefined_without_insurance():
    with pytest.raises(ValueError):
        risk.diversification_benefit(model.explicit([[0.0, 0.0]], 2.0))


@given(st.floats(0.0, 1.0))
def test_diversification_zero_at_alpha_one(p):
    if p == 0:
        return
    assert abs(risk.diversification_benefit(model.homogeneous(3, 4, p, 1.0))) <= 1e-10


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_no_diversification_on_complete_graph(a):
    assert abs(risk.diversification_benefit(model.homogeneous(4, 3, 1.0, a))) <= 1e-12


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_ordering_report_holds(a):
    rep = risk.ordering_report(model.homogeneous(3, 3, 0.5, a))
    assert rep.ok and not rep.violations()
    assert {c.expected for c in rep.checks} == ({"ind<=dep"} if a > 1 else {"dep<=ind"})


def test_no_systemic_bound_between_one_and_r():
    rep = risk.ordering_report(model.homogeneous(3, 3, 0.5, 1.5, norm=model.AggregationNorm(2.0)))
    assert rep.checks[-1].verdict is Verdict.NO_BOUND


def test_alpha_one_checks_both_directions():
    rep = risk.ordering_report(model.homogeneous(2, 3, 0.5, 1.0))
    assert rep.ok and sum("reverse" in c.name for c in rep.checks) == 2


def test_ordering_flags_a_fabricated_violation():
    chk = risk._classify("x", 2.0, 1.0, "ind<=dep", 1e-10)
    assert chk.verdict is Verdict.VIOLATED
