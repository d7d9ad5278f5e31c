import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netrisk import model
from netrisk.model import (
    AggregationNorm,
    Compensated,
    ExplicitWeights,
    HomogeneousEdges,
    RaschEdges,
    ScenarioError,
    ToyEdges,
    materialize_probabilities,
    validate_scenario,
)


def test_toy_b0_is_identity():
    np.testing.assert_array_equal(materialize_probabilities(ToyEdges(0.0)), np.eye(3))


def test_toy_first_row():
    P = materialize_probabilities(ToyEdges(0.5))
    np.testing.assert_array_equal(P[0], [1.0, 0.5, 0.25])
    np.testing.assert_array_equal(P[1], [0.25, 1.0, 0.5])
    np.testing.assert_array_equal(P[2], [0.5, 0.25, 1.0])


def test_homogeneous_fill():
    P = materialize_probabilities(HomogeneousEdges(2, 3, 0.3))
    assert P.shape == (2, 3)
    assert np.all(P == 0.3)


def test_toy_b1_equals_complete_homogeneous():
    np.testing.assert_array_equal(materialize_probabilities(ToyEdges(1.0)),
                                  materialize_probabilities(HomogeneousEdges(3, 3, 1.0)))


def test_rasch_rejects_product_above_one_and_names_the_edge():
    with pytest.raises(ScenarioError) as err:
        materialize_probabilities(RaschEdges([1.0, 2.0], [0.4, 0.6]))
    paths = [v.path for v in err.value.violations]
    assert "edges[1][1]" in paths and "edges[1][0]" not in paths


def test_materialized_matrix_is_read_only():
    P = model.toy(0.5, 2.0).P
    with pytest.raises(ValueError):
        P[0, 0] = 0.0


def test_valid_toy_has_no_violations():
    assert validate_scenario(model.toy(0.3, 2.0)) == []


def test_alpha_zero_is_reported():
    msgs = [v.message for v in validate_scenario(model.toy(0.3, 0.0))]
    assert "alpha must be positive" in msgs


def test_explicit_weight_column_sum_is_reported_by_object():
    W = np.array([[0.6, 0.5], [0.6, 0.5]])
    s = model.homogeneous(2, 2, 0.5, 2.0, weights=ExplicitWeights(W))
    bad = validate_scenario(s)
    assert len(bad) == 1 and "object 0" in bad[0].message


def test_explicit_weight_sum_counts_only_possible_insurers():
    W = np.array([[0.6], [0.6]])
    s = model.explicit([[0.5], [0.0]], 2.0, weights=ExplicitWeights(W))
    assert validate_scenario(s) == []


def test_scale_count_must_match_objects():
    s = model.MarketScenario(ToyEdges(0.2), model.ClaimSpec(2.0, (1.0, 1.0)))
    assert any("claim scales" in v.message for v in validate_scenario(s))


def test_validation_never_raises_on_garbage():
    s = model.MarketScenario(model.ExplicitEdges([[np.nan, 2.0]]), model.ClaimSpec(-1.0, (0.0, 1.0)),
                             weights=Compensated(-1.0), norm=AggregationNorm(-2.0))
    paths = {v.path for v in validate_scenario(s)}
    assert {"claims.alpha", "claims.scales[0]", "edges", "norm.r", "weights.r"} <= paths


def test_proportional_zero_over_zero():
    np.testing.assert_array_equal(model.Proportional().factor(np.array([0, 1, 4])), [0.0, 1.0, 0.25])


def test_compensated_weights():
    w = Compensated(2.0).factor(np.array([0, 1, 4]))
    np.testing.assert_allclose(w, [0.0, 1.0, 2.0])
    assert Compensated("inf").factor(3) == 3.0


@given(st.lists(st.floats(0, 10), min_size=1, max_size=6), st.sampled_from([0.5, 1.0, 2.0, 5.0, math.inf]))
def test_unit_vectors_have_norm_one(_, r):
    n = AggregationNorm(r)
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        assert n(e) == pytest.approx(1.0, abs=1e-15)


def test_norm_parses_inf_string():
    assert AggregationNorm("inf").is_max


@given(st.floats(0, 1))
def test_materialize_is_deterministic(b):
    a = materialize_probabilities(ToyEdges(b))
    np.testing.assert_array_equal(a, materialize_probabilities(ToyEdges(b)))


def test_weight_matrix_proportional_columns_sum_to_one_or_zero():
    s = model.homogeneous(4, 5, 0.5, 2.0)
    rng = np.random.default_rng(0)
    ind = (rng.random((200, 4, 5)) < 0.5).astype(float)
    sums = s.weight_matrix(ind).sum(axis=1)
    assert np.all(np.isclose(sums, 1.0) | (sums == 0.0))
