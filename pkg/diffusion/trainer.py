"""
Denoising (epsilon-prediction) training of a ScinoNetwork and the score
model it yields at the smallest diffusion step.

With ``score_output`` the network output is the standardized score itself
and eps_hat = -sigma_t * output; the loss is the same epsilon MSE and the
score needs no 1 / sigma_t factor.
"""

from copy import deepcopy
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from diffcore.hyperdual import HyperDualResult
from diffcore.tape import param_gradient
from diffusion.optimizer import Adam
from diffusion.schedule import NoiseSchedule
from errors import ConfigError, DataError, NumericError, TrainingDivergedError
from logger_config import log_error, train_logger
from scino.checkpoint import load_checkpoint, save_checkpoint
from scino.hyperparams import HyperParams
from scino.network import ScinoNetwork
from utils.seeding import substream


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    standardize: bool = True
    diffusion_steps: int = 100
    beta_start: float = 1e-4
    beta_end: float = 0.02
    probe_steps: int = 200
    score_output: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2 (batch normalization needs more than one sample)")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.probe_steps < 1:
            raise ConfigError(f"probe_steps must be >= 1, got {self.probe_steps}")

    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule.linear(self.diffusion_steps, self.beta_start, self.beta_end)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainedScoreModel:
    network: ScinoNetwork
    schedule: NoiseSchedule
    data_mean: np.ndarray
    data_std: np.ndarray
    t_eval: int = 1
    loss_history: List[float] = field(default_factory=list)
    columns: Optional[Sequence[int]] = None
    score_output: bool = False

    @property
    def n_vars(self) -> int:
        return self.network.hp.n_vars

    @property
    def time_input(self) -> float:
        return float(self.schedule.time_input(self.t_eval))

    @property
    def score_scale(self) -> float:
        """Maps network outputs to standardized-space scores"""
        if self.score_output:
            return 1.0
        return -1.0 / float(self.schedule.noise_std(self.t_eval))

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.data_mean) / self.data_std

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_vars:
            raise DataError(f"model expects {self.n_vars} columns, got {x.shape[1]}")
        return x

    def score_at(self, x: np.ndarray) -> np.ndarray:
        """Data score in original units: score_scale * output divided by column std"""
        x = self._check_input(x)
        out = self.network.predict(self.time_input, self.standardize(x))
        return self.score_scale * out / self.data_std

    def derivatives(self, x: np.ndarray, dir_a: int, dir_b: int) -> HyperDualResult:
        """Score and its input derivatives in original units via the affine chain rule"""
        x = self._check_input(x)
        res = self.network.forward_hyperdual(self.time_input, self.standardize(x), dir_a, dir_b)
        c = self.score_scale
        s = self.data_std
        return HyperDualResult(
            value=c * res.value / s,
            d_a=c * res.d_a / (s * s[dir_a]),
            d_b=c * res.d_b / (s * s[dir_b]),
            d_ab=c * res.d_ab / (s * s[dir_a] * s[dir_b]),
        )

    def hessian_diag(self, x: np.ndarray, nodes: Sequence[int]) -> np.ndarray:
        """d S_j / d x_j for each j in ``nodes`` at every row of x"""
        x = self._check_input(x)
        out = np.empty((x.shape[0], len(nodes)))
        for k, j in enumerate(nodes):
            out[:, k] = self.derivatives(x, j, j).d_a[:, j]
        return out


def denoising_loss(tape, network: ScinoNetwork, batch):
    """
    Batch mean of ||eps - eps_hat||^2 summed over coordinates, with
    eps_hat = out_scale * network output per row.
    """
    t_input, x_t, eps, out_scale, dropout_rng = batch
    eps_hat = tape.mul(network.forward(tape, t_input, x_t, rng=dropout_rng), tape.const(out_scale))
    diff = tape.sub(eps_hat, eps)
    return tape.div(tape.sum(tape.mul(diff, diff)), float(x_t.shape[0]))


def _snapshot(network: ScinoNetwork):
    return deepcopy(network.params), deepcopy(network.buffers)


def _restore(network: ScinoNetwork, snapshot):
    params, buffers = snapshot
    for name, value in params.items():
        network.params[name][...] = value
    for name, value in buffers.items():
        network.buffers[name][...] = value


def train(
    dataset,
    hp: HyperParams,
    cfg: TrainConfig,
    member: int = 0,
    network: Optional[ScinoNetwork] = None,
) -> TrainedScoreModel:
    """
    Fit a ScinoNetwork by epsilon-prediction on uniformly sampled steps.

    Deterministic given ``cfg.seed`` and ``member``. Returns the model in
    eval mode. A non-finite loss restores the parameters saved at the start
    of the epoch and raises TrainingDivergedError carrying that model.
    """
    values = dataset.values
    n_samples, n_vars = values.shape
    if hp.n_vars != n_vars:
        raise ConfigError(f"HyperParams.n_vars={hp.n_vars} but dataset has {n_vars} columns")
    if n_samples < cfg.batch_size:
        raise DataError(f"need at least batch_size={cfg.batch_size} rows, got {n_samples}")

    schedule = cfg.schedule()
    if cfg.standardize:
        z, mean, std = dataset.standardized()
    else:
        z, mean, std = values, np.zeros(n_vars), np.ones(n_vars)

    if network is None:
        network = ScinoNetwork.initialize(hp, substream(cfg.seed, "init", member))
    network.train()
    optimizer = Adam(network.params, lr=cfg.learning_rate)
    batch_rng = substream(cfg.seed, "batch", member)
    noise_rng = substream(cfg.seed, "noise", member)
    dropout_rng = substream(cfg.seed, "dropout", member)

    model = TrainedScoreModel(network, schedule, mean, std, score_output=cfg.score_output)
    n_batches = n_samples // cfg.batch_size
    train_logger.info(
        f"Training member {member}: N={n_samples} D={n_vars} H={hp.hidden} L={hp.n_layers} "
        f"epochs={cfg.epochs} batches/epoch={n_batches}"
    )

    for epoch in range(cfg.epochs):
        snapshot = _snapshot(network)
        order = batch_rng.permutation(n_samples)
        batch_losses = []
        for start in range(0, n_samples, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            if idx.size < 2:
                # trailing single row cannot be batch-normalized
                continue
            steps = batch_rng.integers(1, schedule.n_steps + 1, size=idx.size)
            eps = noise_rng.standard_normal((idx.size, n_vars))
            x_t = schedule.perturb(z[idx], steps, eps)
            out_scale = -schedule.noise_std(steps)[:, None] if cfg.score_output else np.ones((idx.size, 1))
            batch = (schedule.time_input(steps), x_t, eps, out_scale, dropout_rng)
            try:
                loss, grads = param_gradient(network, denoising_loss, batch)
            except NumericError as e:
                _restore(network, snapshot)
                network.eval()
                log_error("TRAINING_DIVERGED", str(e), function_name="train")
                raise TrainingDivergedError(
                    f"loss diverged in epoch {epoch + 1}: {e}", model=model, epoch=epoch + 1
                ) from e
            optimizer.step(grads)
            batch_losses.append(loss)

        epoch_loss = float(np.mean(batch_losses))
        model.loss_history.append(epoch_loss)
        train_logger.info(f"Epoch {epoch + 1}/{cfg.epochs} | member {member} | loss {epoch_loss:.5f}")

    network.eval()
    return model


def write_training_log(path: str, loss_history: Sequence[float]):
    frame = pd.DataFrame({"epoch": np.arange(1, len(loss_history) + 1), "loss": list(loss_history)})
    frame.to_csv(path, index=False, float_format="%.17g")


def save_model(path: str, model: TrainedScoreModel, names: Sequence[str] = ()):
    """Checkpoint plus the schedule, standardization and column names the score needs"""
    extra = {
        "schedule": model.schedule.to_dict(),
        "data_mean": np.asarray(model.data_mean, dtype=np.float64).tolist(),
        "data_std": np.asarray(model.data_std, dtype=np.float64).tolist(),
        "t_eval": model.t_eval,
        "score_output": bool(model.score_output),
        "loss_history": [float(v) for v in model.loss_history],
        "names": list(names),
    }
    save_checkpoint(path, model.network, extra)


def load_model(path: str) -> Tuple[TrainedScoreModel, Tuple[str, ...]]:
    network, payload = load_checkpoint(path)
    try:
        model = TrainedScoreModel(
            network=network,
            schedule=NoiseSchedule.from_dict(payload["schedule"]),
            data_mean=np.asarray(payload["data_mean"], dtype=np.float64),
            data_std=np.asarray(payload["data_std"], dtype=np.float64),
            t_eval=int(payload.get("t_eval", 1)),
            loss_history=list(payload.get("loss_history", [])),
            score_output=bool(payload.get("score_output", False)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path} lacks score-model fields: {e}") from e
    if model.data_mean.shape != (network.hp.n_vars,) or model.data_std.shape != (network.hp.n_vars,):
        raise DataError(f"{path}: standardization vectors do not match n_vars={network.hp.n_vars}")
    return model, tuple(payload.get("names", ()))
