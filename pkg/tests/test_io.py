import numpy as np
import pytest

from datagen.io import graph_from_dict, load_csv, load_graph_json, save_csv, save_graph_json
from datagen.schema import Dag, Dataset
from errors import DataError
from utils.json_utils import canonical_hash, load_json, save_json


def test_csv_preserves_float64_bits(tmp_path):
    values = np.random.default_rng(0).standard_normal((5, 3)) * 1e-7 + np.pi
    dataset = Dataset(values, ("a", "b", "c"))
    path = str(tmp_path / "data.csv")
    save_csv(path, dataset)
    loaded = load_csv(path)
    assert loaded.names == ("a", "b", "c")
    np.testing.assert_array_equal(loaded.values, values)


def test_header_only_csv_has_no_rows(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("a,b\n")
    dataset = load_csv(str(path))
    assert dataset.values.shape == (0, 2)


@pytest.mark.parametrize(
    "body",
    ["a,a\n1,2\n", "a,b\n1,x\n", "a,b\n1,\n", "a,b\n1,2\n1,2,3\n", ""],
    ids=["duplicate", "non-numeric", "empty-cell", "ragged", "no-header"],
)
def test_malformed_csv(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DataError):
        load_csv(str(path))


def test_missing_csv(tmp_path):
    with pytest.raises(DataError):
        load_csv(str(tmp_path / "absent.csv"))


def test_graph_json(tmp_path):
    dag = Dag.from_edges(3, [(0, 2), (1, 2)], ("u", "v", "w"))
    path = str(tmp_path / "graph.json")
    save_graph_json(path, dag)
    loaded = load_graph_json(path)
    assert loaded.names == dag.names
    assert loaded.edges() == [(0, 2), (1, 2)]


def test_graph_json_errors():
    with pytest.raises(DataError):
        graph_from_dict({"nodes": ["a"]})
    with pytest.raises(DataError):
        graph_from_dict({"nodes": ["a", "b"], "edges": [[0, 2]]})
    with pytest.raises(DataError):
        graph_from_dict({"nodes": ["a", "b"], "edges": [[0, 1], [1, 0]]})


def test_json_helpers_take_plain_python_values(tmp_path):
    path = str(tmp_path / "nested" / "payload.json")
    save_json(path, {"b": [1.5, 2.0], "a": 1})
    assert load_json(path) == {"a": 1, "b": [1.5, 2.0]}
    assert canonical_hash({"a": 1, "b": [1.5, 2.0]}) == canonical_hash({"b": [1.5, 2.0], "a": 1})
    with pytest.raises(TypeError):
        save_json(str(tmp_path / "array.json"), {"x": np.zeros(2)})
    assert load_json(str(tmp_path / "missing.json"), default={}) == {}
