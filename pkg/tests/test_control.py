import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datagen.schema import Dag
from ensemble.control import (
    LOG_COLUMNS,
    DegradedPriorWarning,
    PosteriorFallbackWarning,
    control_order,
    fuse_posterior,
    step_evidence,
    write_posterior_log,
)
from ensemble.evidence import temperature_soften
from ensemble.priors import OraclePrior, TablePrior, UniformPrior
from ensemble.schema import ControlConfig, EnsembleConfig, EvidenceKind
from ensemble.stats import EnsembleStats
from errors import ConfigError, DataError, ProviderError

NAMES = ("a", "b", "c")
CHAIN = Dag.from_edges(3, [(0, 1), (1, 2)], NAMES)


def _stats_fn(sigma_by_node):
    """Every member reports the same sigma per node"""
    calls = []

    def stats_fn(step, remaining, removed):
        calls.append((step, list(remaining), list(removed)))
        rows = np.array([[sigma_by_node[n] for n in remaining]] * 2)
        rows[1] += 1e-3
        return EnsembleStats(rows, remaining)

    stats_fn.calls = calls
    return stats_fn


class _FailingPrior:
    def prior(self, step, remaining):
        raise ProviderError("endpoint down")


def test_uniform_prior_on_context_equals_hard_supervision():
    posterior = fuse_posterior([0.5, 0.5], [0.9, 0.1], np.array([True, True]))
    np.testing.assert_allclose(posterior, [0.9, 0.1])
    hard = fuse_posterior([0.5, 0.5], [0.9, 0.1], np.array([False, False]))
    np.testing.assert_allclose(hard, posterior)


def test_tau_softens_context_nodes_only():
    posterior = fuse_posterior([1.0, 1.0], [0.9, 0.1], np.array([True, True]), tau=1.0)
    np.testing.assert_allclose(posterior, [0.690, 0.310], atol=5e-4)


def test_zero_mass_falls_back_to_prior():
    with pytest.warns(PosteriorFallbackWarning):
        posterior = fuse_posterior([0.0, 1.0], [1.0, 0.0], np.array([True, True]))
    np.testing.assert_allclose(posterior, [0.0, 1.0])
    with pytest.warns(PosteriorFallbackWarning):
        fuse_posterior([0.0, 0.0], [0.5, 0.5], np.array([True, True]))


def test_fuse_rejects_bad_priors():
    with pytest.raises(ConfigError):
        fuse_posterior([-1.0, 1.0], [0.5, 0.5], np.array([True, True]))
    with pytest.raises(ConfigError):
        fuse_posterior([1.0], [0.5, 0.5], np.array([True, True]))


def test_step_evidence_kinds():
    stats = EnsembleStats(np.array([[1.0, 2.0], [1.1, 2.1]]), (0, 1))
    np.testing.assert_array_equal(step_evidence(None, 3, EvidenceKind.NONE, 0.95), np.ones(3))
    assert step_evidence(stats, 2, EvidenceKind.RANK, 0.95).sum() == pytest.approx(1.0)
    assert step_evidence(stats, 2, EvidenceKind.CI, 0.95).shape == (2,)
    with pytest.raises(ConfigError):
        step_evidence(None, 2, EvidenceKind.RANK, 0.95)


def test_oracle_prior_recovers_true_order():
    # evidence favors the root, the point-mass prior still wins
    stats_fn = _stats_fn({0: 0.1, 1: 1.0, 2: 5.0})
    for evidence in (EvidenceKind.RANK, EvidenceKind.CI):
        result = control_order(NAMES, None, OraclePrior(CHAIN), stats_fn, ControlConfig(evidence=evidence))
        assert result.order.removal == [2, 1, 0]
        assert result.order.topological == [0, 1, 2]
        assert not result.degraded


def test_uniform_prior_follows_evidence():
    stats_fn = _stats_fn({0: 0.1, 1: 1.0, 2: 5.0})
    for context in (None, (), ("a",)):
        result = control_order(NAMES, context, UniformPrior(), stats_fn, ControlConfig())
        assert result.order.removal == [0, 1, 2]


def test_stats_fn_sees_remaining_and_removed():
    stats_fn = _stats_fn({0: 0.1, 1: 1.0, 2: 5.0})
    control_order(NAMES, None, UniformPrior(), stats_fn, ControlConfig())
    assert stats_fn.calls == [(0, [0, 1, 2], []), (1, [1, 2], [0])]


def test_evidence_none_uses_prior_alone():
    table = TablePrior([{"c": 1.0}, {"a": 0.2, "b": 0.8}], NAMES)
    result = control_order(NAMES, None, table, None, ControlConfig(evidence="none"))
    assert result.order.removal == [2, 1, 0]


def test_log_rows_are_normalized(tmp_path):
    stats_fn = _stats_fn({0: 0.3, 1: 0.2, 2: 0.1})
    result = control_order(NAMES, ("b",), UniformPrior(), stats_fn, ControlConfig(tau=2.0))
    frame = result.log_frame()
    assert list(frame.columns) == LOG_COLUMNS
    sums = frame.groupby("step")["posterior"].sum().to_numpy()
    np.testing.assert_allclose(sums, 1.0, atol=1e-12)
    assert frame.groupby("step")["chosen"].sum().tolist() == [1, 1]
    path = tmp_path / "posterior_log.csv"
    write_posterior_log(str(path), result)
    assert len(pd.read_csv(path)) == 3 + 2


def test_failing_provider_degrades_to_uniform():
    stats_fn = _stats_fn({0: 0.1, 1: 1.0, 2: 5.0})
    with pytest.warns(DegradedPriorWarning):
        result = control_order(NAMES, None, _FailingPrior(), stats_fn, ControlConfig())
    assert result.degraded
    assert result.order.removal == [0, 1, 2]


def test_stats_errors_carry_the_step():
    def broken(step, remaining, removed):
        if step == 1:
            raise DataError("member failed")
        return EnsembleStats(np.array([[0.1, 0.2, 0.3]]), remaining)

    with pytest.raises(DataError) as info:
        control_order(NAMES, None, UniformPrior(), broken, ControlConfig())
    assert info.value.step == 1


def test_unknown_context_names():
    with pytest.raises(ConfigError):
        control_order(NAMES, ("z",), UniformPrior(), None, ControlConfig(evidence="none"))


def test_config_validation():
    with pytest.raises(ConfigError):
        ControlConfig(tau=6.0)
    with pytest.raises(ConfigError):
        ControlConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        ControlConfig(evidence="vote")
    with pytest.raises(ConfigError):
        EnsembleConfig(n_members=0)
    assert ControlConfig(context_set=["a"]).to_dict()["context_set"] == ["a"]


def _rebuilt_posterior(rows: pd.DataFrame) -> np.ndarray:
    context = rows["context"].to_numpy(dtype=bool)
    prior = rows["prior"].to_numpy()
    fused = rows["fused_evidence"].to_numpy()
    weights = np.where(context, prior * fused, fused)
    return weights / weights.sum()


@pytest.mark.parametrize("context", [None, ("a", "c")])
def test_log_rebuilds_the_posterior_with_tau(context):
    stats_fn = _stats_fn({0: 0.4, 1: 0.1, 2: 0.9})
    table = TablePrior([{"a": 0.2, "b": 0.5, "c": 0.3}, {"b": 0.7, "c": 0.3}], NAMES)
    cfg = ControlConfig(evidence=EvidenceKind.RANK, tau=0.3)
    frame = control_order(NAMES, context, table, stats_fn, cfg).log_frame()
    for _, rows in frame.groupby("step"):
        np.testing.assert_allclose(_rebuilt_posterior(rows), rows["posterior"].to_numpy(), rtol=0, atol=1e-12)
        soft = temperature_soften(rows["evidence"].to_numpy(), 0.3)
        context_mask = rows["context"].to_numpy(dtype=bool)
        np.testing.assert_allclose(rows["fused_evidence"].to_numpy()[context_mask], soft[context_mask], atol=1e-15)


def test_hard_supervised_rows_log_evidence_over_n():
    stats_fn = _stats_fn({0: 0.4, 1: 0.1, 2: 0.9})
    frame = control_order(NAMES, ("b",), UniformPrior(), stats_fn, ControlConfig(tau=0.3)).log_frame()
    hard = frame[~frame["context"]]
    sizes = frame.groupby("step")["node"].transform("count")[hard.index]
    np.testing.assert_allclose(hard["fused_evidence"], hard["evidence"] / sizes, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(
    prior=st.lists(st.floats(0.05, 5.0), min_size=2, max_size=6),
    data=st.data(),
)
def test_context_posterior_is_proportional_to_prior_times_evidence(prior, data):
    n = len(prior)
    evidence = np.array(data.draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    posterior = fuse_posterior(prior, evidence, np.ones(n, dtype=bool))
    expected = np.asarray(prior) * evidence
    np.testing.assert_allclose(posterior, expected / expected.sum(), rtol=0, atol=1e-12)
