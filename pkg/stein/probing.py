"""
Probing: keep the trained trunk (MLP_init, LTE, Fourier layers) frozen and
re-fit only MLP_final against minibatch Stein score targets computed on a
subset of columns.

Each step draws B rows, builds one B x B kernel and takes one optimizer
step on the head, so a run with T steps costs O(T B^2) kernel work plus
O(T B) network evaluations regardless of N.
"""

from typing import Optional, Sequence

import numpy as np

from diffcore.ops import NumpyOps
from diffcore.tape import param_gradient
from diffusion.optimizer import Adam
from diffusion.trainer import TrainConfig, TrainedScoreModel
from errors import ConfigError
from logger_config import stein_logger
from stein.estimator import SteinConfig, stein_score
from utils.seeding import substream

numpy_ops = NumpyOps()


def _head_loss(tape, network, batch):
    features, target, weight = batch
    pred = tape.mul(network.head(tape, features), weight)
    diff = tape.sub(pred, target)
    return tape.div(tape.sum(tape.mul(diff, diff)), float(features.shape[0]))


def probe_final_layer(
    pretrained: TrainedScoreModel,
    column_subset: Sequence[int],
    dataset,
    cfg: TrainConfig,
    stein_cfg: SteinConfig = SteinConfig(),
    member: int = 0,
    reinit_head: bool = False,
    steps: Optional[int] = None,
) -> TrainedScoreModel:
    """
    Returns a model whose head approximates the marginal score of
    ``column_subset``. Trunk arrays are shared with ``pretrained`` and never
    written; the model input stays full-D.
    """
    subset = sorted(int(c) for c in column_subset)
    if not subset:
        raise ConfigError("probing needs a non-empty column subset")
    n_vars = pretrained.n_vars
    if subset[-1] >= n_vars or subset[0] < 0:
        raise ConfigError(f"column subset {subset} outside 0..{n_vars - 1}")

    network = pretrained.network.with_shared_trunk().eval()
    if reinit_head:
        network.reinitialize_head(substream(cfg.seed, "head", member))
    head_names = network.head_param_names()
    optimizer = Adam(network.params, lr=cfg.learning_rate, names=head_names)

    values = dataset.values
    n_samples = values.shape[0]
    batch_size = min(cfg.batch_size, n_samples)
    rng = substream(cfg.seed, "probe", member)
    n_steps = steps if steps is not None else cfg.probe_steps

    # scaled head output restricted to the subset columns
    weight = np.zeros(n_vars)
    weight[subset] = pretrained.score_scale
    t_input = pretrained.time_input

    losses = []
    for step in range(n_steps):
        idx = rng.choice(n_samples, size=batch_size, replace=False)
        z = pretrained.standardize(values[idx])
        target = np.zeros_like(z)
        target[:, subset] = stein_score(z[:, subset], stein_cfg)
        features = network.trunk(numpy_ops, t_input, z, update_stats=False)
        loss, grads = param_gradient(
            network, _head_loss, (features, target, weight), trainable=set(head_names)
        )
        optimizer.step(grads)
        losses.append(loss)

    stein_logger.info(
        f"Probed head member={member} subset={subset} steps={n_steps} B={batch_size} "
        f"final loss {losses[-1]:.5f}"
    )
    return TrainedScoreModel(
        network=network,
        schedule=pretrained.schedule,
        data_mean=pretrained.data_mean,
        data_std=pretrained.data_std,
        t_eval=pretrained.t_eval,
        loss_history=losses,
        columns=tuple(subset),
        score_output=pretrained.score_output,
    )
