import os
import tempfile

# keep test log files out of the working tree
os.environ.setdefault("SCINO_LOG_DIR", os.path.join(tempfile.gettempdir(), "scino-test-logs"))

import numpy as np
import pytest

from datagen.generators import GenConfig, generate
from scino.hyperparams import HyperParams
from scino.network import ScinoNetwork


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_hp():
    return HyperParams.desk(3, hidden=8, n_layers=2, fourier_features=4, final_hidden=6, lte_hidden=8)


@pytest.fixture
def tiny_network(tiny_hp):
    return ScinoNetwork.initialize(tiny_hp, np.random.default_rng(0))


@pytest.fixture
def linear_data():
    dag, dataset = generate(GenConfig(n_nodes=4, n_samples=200, mechanism="linear", seed=3))
    return dag, dataset
