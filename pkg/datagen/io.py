import csv

import numpy as np
import pandas as pd

from datagen.schema import Dag, Dataset
from errors import DataError
from utils.json_utils import load_json, save_json


def _read_header(path: str):
    try:
        with open(path, newline="", encoding="utf-8") as f:
            header = next(csv.reader(f), None)
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    if not header:
        raise DataError(f"{path} has no header row")
    duplicates = sorted({name for name in header if header.count(name) > 1})
    if duplicates:
        raise DataError(f"duplicate column names in {path}: {duplicates}")
    return header


def load_csv(path: str) -> Dataset:
    """Header row of variable names, numeric body; empty body gives N = 0"""
    header = _read_header(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.ParserError as e:
        raise DataError(f"ragged rows in {path}: {e}") from e
    if list(frame.columns) != header:
        raise DataError(f"could not parse the header of {path}")
    try:
        values = frame.to_numpy(dtype=np.float64)
    except ValueError as e:
        raise DataError(f"non-numeric cells in {path}: {e}") from e
    if np.isnan(values).any():
        raise DataError(f"missing or empty cells in {path}")
    return Dataset(values.reshape(len(frame), len(header)), tuple(header))


def save_csv(path: str, dataset: Dataset):
    frame = pd.DataFrame(dataset.values, columns=list(dataset.names))
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def graph_to_dict(dag: Dag) -> dict:
    return {"nodes": list(dag.names), "edges": [[i, j] for i, j in dag.edges()]}


def graph_from_dict(payload: dict) -> Dag:
    try:
        nodes = list(payload["nodes"])
        edges = [tuple(int(v) for v in edge) for edge in payload["edges"]]
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed graph JSON: {e}") from e
    for i, j in edges:
        if not (0 <= i < len(nodes) and 0 <= j < len(nodes)):
            raise DataError(f"edge {[i, j]} refers to a node outside 0..{len(nodes) - 1}")
    return Dag.from_edges(len(nodes), edges, nodes)


def save_graph_json(path: str, dag: Dag):
    save_json(path, graph_to_dict(dag))


def load_graph_json(path: str) -> Dag:
    return graph_from_dict(load_json(path))
