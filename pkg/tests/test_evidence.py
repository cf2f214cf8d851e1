import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ensemble.evidence import ci_evidence, length_normalized_prior, rank_evidence, temperature_soften
from ensemble.stats import EnsembleStats, ensemble_sigmas
from errors import ConfigError, DataError
from ordering.schema import HessianDiagTable


def test_rank_evidence_example():
    stats = EnsembleStats(np.array([[1.0, 2.0, 3.0], [2.0, 1.0, 3.0]]), (0, 1, 2))
    np.testing.assert_allclose(stats.average_ranks, [1.5, 1.5, 3.0])
    np.testing.assert_allclose(rank_evidence(stats), [0.450, 0.450, 0.100], atol=5e-4)


def test_ranks_break_ties_by_node_index():
    stats = EnsembleStats(np.array([[1.0, 1.0, 0.5]]), (4, 7, 9))
    np.testing.assert_array_equal(stats.ranks, [[2.0, 3.0, 1.0]])


def test_ci_evidence_counts_members():
    # node 1 overlaps the minimizer of two members out of three
    stats = EnsembleStats(
        np.sqrt(np.array([[1.0, 1.1, 9.0], [1.2, 1.0, 9.5], [5.0, 0.9, 9.2]])), (0, 1, 2)
    )
    lower, upper = stats.ci_bounds(0.95)
    assert np.all(lower <= upper)
    evidence = ci_evidence(stats)
    assert evidence.shape == (3,)
    assert np.all((evidence >= 0) & (evidence <= 1))
    assert evidence[2] == 0.0
    assert evidence[int(np.argmin((stats.sigmas**2).mean(axis=0)))] == 1.0


def test_ci_evidence_two_of_three():
    # members 0 and 1 pick node 0 (wide interval), member 2 picks node 1 (tight)
    variances = np.array([[1.0, 3.0, 3.5], [1.0, 3.0, 3.5], [4.0, 3.0, 3.5]])
    stats = EnsembleStats(np.sqrt(variances), (0, 1, 2))
    np.testing.assert_array_equal(stats.member_minimizers, [0, 0, 1])
    np.testing.assert_allclose(ci_evidence(stats), [1.0, 1.0, 2.0 / 3.0])


def test_ci_needs_two_members():
    with pytest.raises(DataError):
        ci_evidence(EnsembleStats(np.ones((1, 2)), (0, 1)))
    with pytest.raises(DataError):
        EnsembleStats(np.ones((2, 2)), (0, 1)).ci_bounds(1.0)


def test_length_normalization_examples():
    logs = np.log([0.5, 0.5])
    assert length_normalized_prior(logs, 1.0) == pytest.approx(0.5)
    assert length_normalized_prior(logs, 0.5) == pytest.approx(0.5 ** np.sqrt(2))
    assert length_normalized_prior(logs, 0.5) == pytest.approx(0.3752, abs=1e-4)
    with pytest.raises(ConfigError):
        length_normalized_prior(logs, 0.0)
    with pytest.raises(DataError):
        length_normalized_prior([], 1.0)


def test_temperature_softening_examples():
    np.testing.assert_allclose(temperature_soften([0.9, 0.1], 1.0), [0.690, 0.310], atol=5e-4)
    np.testing.assert_allclose(temperature_soften([0.9, 0.1, 0.3], 0.0), 1.0 / 3.0)
    with pytest.raises(ConfigError):
        temperature_soften([0.5], -1.0)


@given(arrays(np.float64, 5, elements=st.floats(0.0, 1.0)), st.floats(0.0, 5.0))
def test_softened_evidence_is_a_distribution(evidence, tau):
    soft = temperature_soften(evidence, tau)
    assert soft.sum() == pytest.approx(1.0)
    assert np.all(soft > 0)


sigma_tables = arrays(np.float64, (4, 5), elements=st.integers(1, 500).map(lambda k: k / 10.0))


@settings(max_examples=50)
@given(sigma_tables, st.sampled_from([np.log, np.sqrt, np.exp, lambda v: v**3 + v, lambda v: 2.0 * v - 7.0]))
def test_rank_evidence_ignores_increasing_transforms(sigmas, transform):
    nodes = (0, 1, 2, 3, 4)
    base = rank_evidence(EnsembleStats(sigmas, nodes))
    np.testing.assert_allclose(rank_evidence(EnsembleStats(transform(sigmas), nodes)), base, atol=1e-15)


@settings(max_examples=50)
@given(sigma_tables, st.floats(0.5, 0.9), st.floats(0.01, 0.09))
def test_ci_evidence_grows_with_confidence(sigmas, low, gap):
    stats = EnsembleStats(sigmas, (0, 1, 2, 3, 4))
    assert np.all(ci_evidence(stats, low) <= ci_evidence(stats, low + gap))


class _ConstantBackend:
    def __init__(self, scale):
        self.scale = scale

    def table(self, step, remaining, removed):
        nodes = sorted(remaining)
        column = np.array([-1.0, 1.0])[:, None] * np.asarray(self.scale)[nodes]
        return HessianDiagTable(step, nodes, column)


def test_ensemble_sigmas_stack_member_rows():
    members = [_ConstantBackend([1.0, 2.0, 3.0]), _ConstantBackend([2.0, 2.0, 2.0])]
    stats = ensemble_sigmas(members, [2, 0], jobs=2)
    assert stats.nodes == (0, 2)
    assert stats.sigmas.shape == (2, 2)
    assert stats.sigmas[0, 1] > stats.sigmas[0, 0]
    with pytest.raises(DataError):
        ensemble_sigmas([], [0])
