import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datagen.generators import GenConfig, gen_er_dag, gen_physics, generate, physics_dag
from datagen.schema import Dag, Dataset
from errors import ConfigError, DataError


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000))
def test_er_graphs_are_acyclic(n_nodes, seed):
    dag = gen_er_dag(GenConfig(n_nodes=n_nodes, seed=seed))
    assert nx.is_directed_acyclic_graph(dag.to_networkx())
    assert dag.n_nodes == n_nodes


def test_edge_probability_tracks_budget():
    assert GenConfig(n_nodes=5).edge_probability == 1.0
    assert GenConfig(n_nodes=20).edge_probability == pytest.approx(80 / 190)
    assert GenConfig(n_nodes=10, expected_edges=9).edge_probability == pytest.approx(9 / 45)


@pytest.mark.parametrize("mechanism", ["gp", "linear", "mlp"])
def test_generate_is_seeded(mechanism):
    cfg = GenConfig(n_nodes=4, n_samples=50, mechanism=mechanism, seed=5)
    dag_a, data_a = generate(cfg)
    dag_b, data_b = generate(cfg)
    np.testing.assert_array_equal(dag_a.adjacency, dag_b.adjacency)
    np.testing.assert_array_equal(data_a.values, data_b.values)
    assert data_a.values.shape == (50, 4)
    assert data_a.metadata["mechanism"] == mechanism


def test_linear_samples_follow_weights():
    cfg = GenConfig(n_nodes=3, n_samples=20_000, mechanism="linear", seed=1, expected_edges=3)
    dag, data = generate(cfg)
    weights = np.asarray(data.metadata["weights"])
    residual = data.values - data.values @ weights
    np.testing.assert_allclose(residual.std(axis=0), 1.0, atol=0.05)
    assert np.all((weights != 0) == dag.adjacency)


def test_config_validation():
    with pytest.raises(ConfigError):
        GenConfig(mechanism="spline")
    with pytest.raises(ConfigError):
        GenConfig(noise_std=0.0)
    with pytest.raises(ConfigError):
        gen_er_dag(GenConfig(n_nodes=1))


def test_physics_graph():
    dag, data = gen_physics(100, seed=2)
    assert dag.names == ("TSI", "SAT", "WS", "ER", "RNFL", "MC", "Wgt")
    assert data.values.shape == (100, 7)
    assert dag.n_edges == physics_dag().n_edges > 0


def test_dag_rejects_cycles_and_self_loops():
    with pytest.raises(DataError):
        Dag.from_edges(2, [(0, 1), (1, 0)])
    with pytest.raises(DataError):
        Dag(np.eye(2, dtype=bool))
    with pytest.raises(DataError):
        Dag.empty(2, ("a", "a"))


def test_dag_leaves_within_remaining():
    dag = Dag.from_edges(3, [(0, 1), (1, 2)])
    assert dag.leaves() == [2]
    assert dag.leaves([0, 1]) == [1]
    assert dag.topological_order() == [0, 1, 2]


def test_dataset_validation_and_standardization():
    with pytest.raises(DataError):
        Dataset(np.array([[1.0, np.nan]]))
    data = Dataset(np.array([[1.0, 5.0], [3.0, 5.0]]))
    z, mean, std = data.standardized()
    np.testing.assert_allclose(mean, [2.0, 5.0])
    np.testing.assert_allclose(std, [1.0, 1.0])
    np.testing.assert_allclose(z[:, 0], [-1.0, 1.0])
    assert data.names == ("x1", "x2")
    assert data.select([1]).names == ("x2",)
