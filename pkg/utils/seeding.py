"""
Named random substreams derived from one root seed.

Every consumer asks for a stream by name ("data", "init", "dropout",
"batch", "probe", ...) and optionally a member index, so ensemble members
differ only by that index.
"""

import zlib

import numpy as np


def substream_seed(root_seed: int, name: str, member: int = 0) -> np.random.SeedSequence:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.SeedSequence([int(root_seed), key, int(member)])


def substream(root_seed: int, name: str, member: int = 0) -> np.random.Generator:
    return np.random.default_rng(substream_seed(root_seed, name, member))
