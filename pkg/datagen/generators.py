"""
Synthetic causal data: Erdos-Renyi DAGs and additive-noise samplers
(Gaussian-process, linear, MLP mechanisms) plus the 7-node physics SEM.
"""

from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky
from scipy.spatial.distance import cdist

from datagen.schema import Dag, Dataset
from errors import ConfigError, DataError
from logger_config import main_logger
from utils.seeding import substream

GP_JITTER = 1e-8
GP_JITTER_RETRY = 1e-6
MECHANISMS = ("gp", "linear", "mlp")

PHYSICS_NAMES = ("TSI", "SAT", "WS", "ER", "RNFL", "MC", "Wgt")
PHYSICS_EDGES = (
    ("TSI", "SAT"),
    ("TSI", "ER"),
    ("TSI", "WS"),
    ("SAT", "ER"),
    ("WS", "SAT"),
    ("WS", "ER"),
    ("ER", "RNFL"),
    ("ER", "MC"),
    ("RNFL", "MC"),
    ("MC", "Wgt"),
)


@dataclass(frozen=True)
class GenConfig:
    n_nodes: int = 5
    expected_edges: Optional[float] = None
    n_samples: int = 1000
    noise_std: float = 1.0
    seed: int = 0
    mechanism: str = "gp"
    weight_low: float = 0.5
    weight_high: float = 2.0
    mlp_hidden: int = 16

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ConfigError(f"n_nodes must be >= 1, got {self.n_nodes}")
        if self.n_samples < 0:
            raise ConfigError(f"n_samples must be >= 0, got {self.n_samples}")
        if self.noise_std <= 0:
            raise ConfigError(f"noise_std must be positive, got {self.noise_std}")
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"mechanism must be one of {MECHANISMS}, got {self.mechanism!r}")
        if not 0 <= self.weight_low <= self.weight_high:
            raise ConfigError("need 0 <= weight_low <= weight_high")

    @property
    def edge_budget(self) -> float:
        return 4.0 * self.n_nodes if self.expected_edges is None else float(self.expected_edges)

    @property
    def edge_probability(self) -> float:
        pairs = self.n_nodes * (self.n_nodes - 1) / 2
        return 0.0 if pairs == 0 else min(1.0, self.edge_budget / pairs)

    def to_dict(self) -> dict:
        return asdict(self)


def _rng(cfg: GenConfig, name: str, rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else substream(cfg.seed, name)


def gen_er_dag(cfg: GenConfig, rng: Optional[np.random.Generator] = None) -> Dag:
    """Forward pairs of a random permutation, each kept with probability p"""
    rng = _rng(cfg, "graph", rng)
    if cfg.n_nodes < 2:
        raise ConfigError("an ER graph needs at least 2 nodes")
    perm = rng.permutation(cfg.n_nodes)
    upper = np.triu(rng.random((cfg.n_nodes, cfg.n_nodes)) < cfg.edge_probability, k=1)
    adjacency = np.zeros_like(upper)
    adjacency[np.ix_(perm, perm)] = upper
    return Dag(adjacency)


def _gp_draw(inputs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Joint N(0, K) draw of f at the rows of ``inputs``; repeated rows share a value"""
    unique, inverse = np.unique(inputs, axis=0, return_inverse=True)
    K = np.exp(-0.5 * cdist(unique, unique, "sqeuclidean"))
    z = rng.standard_normal(unique.shape[0])
    for jitter in (GP_JITTER, GP_JITTER_RETRY):
        try:
            L = cholesky(K + jitter * np.eye(K.shape[0]), lower=True)
            break
        except LinAlgError:
            main_logger.warning(f"GP Cholesky failed with jitter {jitter:g}")
    else:
        raise DataError("GP Gram matrix is not positive definite even after raising jitter")
    return (L @ z)[np.asarray(inverse).ravel()]


def _sample_anm(dag: Dag, cfg: GenConfig, mechanism, rng: np.random.Generator, metadata: dict) -> Dataset:
    values = np.zeros((cfg.n_samples, dag.n_nodes))
    for node in dag.topological_order():
        parents = dag.parents(node)
        noise = cfg.noise_std * rng.standard_normal(cfg.n_samples)
        signal = mechanism(values[:, parents], node) if parents and cfg.n_samples else 0.0
        values[:, node] = signal + noise
    return Dataset(values, dag.names, metadata)


def sample_gp_anm(dag: Dag, cfg: GenConfig, rng: Optional[np.random.Generator] = None) -> Dataset:
    rng = _rng(cfg, "data", rng)
    return _sample_anm(dag, cfg, lambda parents, node: _gp_draw(parents, rng), rng, {"mechanism": "gp"})


def _signed_uniform(rng: np.random.Generator, low: float, high: float, size) -> np.ndarray:
    magnitude = rng.uniform(low, high, size=size)
    return np.where(rng.random(size) < 0.5, -magnitude, magnitude)


def linear_weights(dag: Dag, low: float, high: float, rng: np.random.Generator) -> np.ndarray:
    """Edge weights from +-U(low, high), zero off the edge set"""
    return np.where(dag.adjacency, _signed_uniform(rng, low, high, dag.adjacency.shape), 0.0)


def sample_linear_anm(
    dag: Dag,
    weight_low: float,
    weight_high: float,
    cfg: GenConfig,
    rng: Optional[np.random.Generator] = None,
    weights: Optional[np.ndarray] = None,
) -> Dataset:
    rng = _rng(cfg, "data", rng)
    if weights is None:
        weights = linear_weights(dag, weight_low, weight_high, rng)
    mechanism = lambda parents, node: parents @ weights[dag.parents(node), node]
    return _sample_anm(dag, cfg, mechanism, rng, {"mechanism": "linear", "weights": weights.tolist()})


def sample_mlp_anm(dag: Dag, cfg: GenConfig, rng: Optional[np.random.Generator] = None) -> Dataset:
    """Each mechanism is a random one-hidden-layer sigmoid MLP of the parents"""
    rng = _rng(cfg, "data", rng)

    def mechanism(parents: np.ndarray, node: int) -> np.ndarray:
        w1 = _signed_uniform(rng, cfg.weight_low, cfg.weight_high, (parents.shape[1], cfg.mlp_hidden))
        w2 = _signed_uniform(rng, cfg.weight_low, cfg.weight_high, cfg.mlp_hidden)
        return (1.0 / (1.0 + np.exp(-parents @ w1))) @ w2

    return _sample_anm(dag, cfg, mechanism, rng, {"mechanism": "mlp"})


def generate(cfg: GenConfig) -> Tuple[Dag, Dataset]:
    """ER graph plus samples from the configured mechanism"""
    dag = gen_er_dag(cfg)
    if cfg.mechanism == "gp":
        data = sample_gp_anm(dag, cfg)
    elif cfg.mechanism == "linear":
        data = sample_linear_anm(dag, cfg.weight_low, cfg.weight_high, cfg)
    else:
        data = sample_mlp_anm(dag, cfg)
    main_logger.info(
        f"Generated ER graph D={dag.n_nodes} edges={dag.n_edges} N={data.n_samples} mechanism={cfg.mechanism}"
    )
    return dag, data


def physics_dag() -> Dag:
    index = {name: i for i, name in enumerate(PHYSICS_NAMES)}
    return Dag.from_edges(len(PHYSICS_NAMES), [(index[a], index[b]) for a, b in PHYSICS_EDGES], PHYSICS_NAMES)


def gen_physics(n_samples: int = 5000, seed: int = 0) -> Tuple[Dag, Dataset]:
    """x = 2 sin(u) + u + z with u = A^T (x + 0.5) over the water-evaporation graph"""
    rng = substream(seed, "physics")
    dag = physics_dag()
    weights = np.where(dag.adjacency, _signed_uniform(rng, 0.1, 1.0, dag.adjacency.shape), 0.0)
    values = np.zeros((n_samples, dag.n_nodes))
    for node in dag.topological_order():
        u = (values + 0.5) @ weights[:, node]
        values[:, node] = 2.0 * np.sin(u) + u + rng.standard_normal(n_samples)
    return dag, Dataset(values, dag.names, {"mechanism": "physics", "weights": weights.tolist()})
