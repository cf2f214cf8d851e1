import numpy as np
import pytest

from errors import DataError, DegenerateDenominatorError
from ordering.analytic import (
    AnalyticScoreModel,
    linear_gaussian_covariance,
    linear_gaussian_score,
    marginal_gaussian_score,
    quadratic_anm_score,
)
from ordering.deciduous import _PassCache, deciduous_hessian_diag, deciduous_score
from ordering.schema import ResidueSign

CHAIN3 = np.array([[0.0, 0.8, 0.0], [0.0, 0.0, -1.2], [0.0, 0.0, 0.0]])
FORK = np.array([[0.0, 1.1, -0.7], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


@pytest.fixture
def points():
    return 2.0 * np.random.default_rng(11).standard_normal((40, 3))


def test_two_node_example():
    # x1 -> x2 with unit weight: the marginal of x1 is N(0, 1)
    weights = np.array([[0.0, 1.0], [0.0, 0.0]])
    x = np.array([[1.0, 2.0]])
    model = linear_gaussian_score(weights)
    corrected = deciduous_score(model, x, [1], ResidueSign.CORRECTED)
    plus = deciduous_score(model, x, [1], ResidueSign.PAPER)
    assert corrected[0, 0] == pytest.approx(-1.0, abs=1e-12)
    assert abs(plus[0, 0] + 1.0) > 1e-3


@pytest.mark.parametrize("weights,removed", [(CHAIN3, [2]), (FORK, [1, 2])])
def test_corrected_sign_recovers_marginal_score(weights, removed, points):
    keep = [j for j in range(3) if j not in removed]
    truth = marginal_gaussian_score(weights, keep)(points)
    model = linear_gaussian_score(weights)
    np.testing.assert_allclose(deciduous_score(model, points, removed), truth, atol=1e-9)
    assert np.max(np.abs(deciduous_score(model, points, removed, ResidueSign.PAPER) - truth)) > 1e-3


@pytest.mark.parametrize("weights,removed", [(CHAIN3, [2]), (FORK, [1, 2])])
def test_hessian_diag_matches_marginal_precision(weights, removed, points):
    keep = [j for j in range(3) if j not in removed]
    sigma = linear_gaussian_covariance(weights)
    expected = -np.diag(np.linalg.inv(sigma[np.ix_(keep, keep)]))
    diag = deciduous_hessian_diag(linear_gaussian_score(weights), points, removed)
    np.testing.assert_allclose(diag, np.broadcast_to(expected, diag.shape), atol=1e-9)


def test_nothing_removed_is_plain_hessian_diag(points):
    model = linear_gaussian_score(CHAIN3)
    np.testing.assert_allclose(deciduous_hessian_diag(model, points, []), model.hessian_diag(points, [0, 1, 2]))


def test_quadratic_leaf_has_constant_diagonal(points):
    model = quadratic_anm_score()
    diag = deciduous_hessian_diag(model, points[:, :2], [])
    np.testing.assert_allclose(diag[:, 1], -1.0)
    assert diag[:, 0].var() > 0.1


def test_invalid_removed_sets(points):
    model = linear_gaussian_score(CHAIN3)
    with pytest.raises(DataError):
        deciduous_score(model, points, [3])
    with pytest.raises(DataError):
        deciduous_score(model, points, [1, 1])
    with pytest.raises(DataError):
        deciduous_score(model, points, [0, 1, 2])


def test_degenerate_denominator(points):
    flat = AnalyticScoreModel(lambda ops, x: ops.mul(x, 0.0), 3)
    with pytest.raises(DegenerateDenominatorError) as info:
        deciduous_hessian_diag(flat, points, [2])
    assert info.value.node == 2
    assert info.value.exit_code == 4


class _CountingModel:
    def __init__(self, model):
        self.model = model
        self.n_vars = model.n_vars
        self.calls = []

    def derivatives(self, x, dir_a, dir_b):
        self.calls.append((dir_a, dir_b))
        return self.model.derivatives(x, dir_a, dir_b)


def test_pass_cache_keys_on_ordered_pairs(points):
    model = _CountingModel(linear_gaussian_score(CHAIN3))
    cache = _PassCache(model, points)
    first = cache.get(0, 2)
    assert cache.get(0, 2) is first
    cache.get(2, 0)
    assert model.calls == [(0, 2), (2, 0)]
