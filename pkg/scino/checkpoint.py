"""
Self-describing JSON checkpoints, header format "scino.v1".

Parameters and buffers are stored in declaration order as shape + flat
row-major data; JSON floats round-trip float64 exactly.
"""

from collections import OrderedDict
from typing import Any, Dict, Optional

import numpy as np

from errors import DataError
from scino.hyperparams import HyperParams
from scino.network import ScinoNetwork
from utils.json_utils import load_json, save_json

CHECKPOINT_FORMAT = "scino.v1"


def _encode_arrays(arrays: Dict[str, np.ndarray]) -> list:
    return [
        {"name": name, "shape": list(value.shape), "data": value.ravel().tolist()}
        for name, value in arrays.items()
    ]


def _decode_arrays(entries: list) -> Dict[str, np.ndarray]:
    arrays: Dict[str, np.ndarray] = OrderedDict()
    for entry in entries:
        data = np.asarray(entry["data"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if data.size != int(np.prod(shape)):
            raise DataError(f"checkpoint array '{entry['name']}' has {data.size} values for shape {shape}")
        arrays[entry["name"]] = data.reshape(shape)
    return arrays


def network_to_dict(network: ScinoNetwork) -> Dict[str, Any]:
    return {
        "hyperparams": network.hp.to_dict(),
        "parameters": _encode_arrays(network.params),
        "buffers": _encode_arrays(network.buffers),
    }


def network_from_dict(payload: Dict[str, Any]) -> ScinoNetwork:
    try:
        hp = HyperParams(**payload["hyperparams"])
        params = _decode_arrays(payload["parameters"])
        buffers = _decode_arrays(payload["buffers"])
    except (KeyError, TypeError) as e:
        raise DataError(f"malformed checkpoint: {e}") from e

    expected = ScinoNetwork.initialize(hp, np.random.default_rng(0))
    for name, value in expected.params.items():
        if name not in params or params[name].shape != value.shape:
            raise DataError(f"checkpoint parameter '{name}' missing or mis-shaped")
    return ScinoNetwork(hp, params, buffers, training=False)


def save_checkpoint(path: str, network: ScinoNetwork, extra: Optional[Dict[str, Any]] = None):
    payload = {"format": CHECKPOINT_FORMAT, **network_to_dict(network)}
    if extra:
        payload.update(extra)
    save_json(path, payload)


def load_checkpoint(path: str):
    """Returns (network in eval mode, the full payload)"""
    payload = load_json(path)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"unsupported checkpoint format {payload.get('format')!r} in {path}")
    return network_from_dict(payload), payload
