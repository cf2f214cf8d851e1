"""Ensemble member backends: probed heads on one trunk, or independent trainings."""

from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed

from diffusion.trainer import TrainConfig, TrainedScoreModel, train
from ensemble.schema import EnsembleConfig, EnsembleMode
from ensemble.stats import ensemble_sigmas
from logger_config import control_logger
from ordering.backends import DeciduousBackend, backends_for_ensemble
from ordering.schema import ResidueSign
from scino.hyperparams import HyperParams
from stein.estimator import SteinConfig


def train_members(dataset, hp: HyperParams, train_cfg: TrainConfig, n_members: int, jobs: int = 1) -> List[TrainedScoreModel]:
    """M full trainings differing only in member index"""
    control_logger.info(f"Training {n_members} independent members (jobs={jobs})")
    return Parallel(n_jobs=jobs, prefer="threads")(
        delayed(train)(dataset, hp, train_cfg, member=m) for m in range(n_members)
    )


def build_members(
    dataset,
    cfg: EnsembleConfig,
    x_eval: np.ndarray,
    hp: Optional[HyperParams] = None,
    train_cfg: TrainConfig = TrainConfig(),
    stein_cfg: SteinConfig = SteinConfig(),
    pretrained: Optional[TrainedScoreModel] = None,
    sign: ResidueSign = ResidueSign.CORRECTED,
) -> list:
    hp = hp or HyperParams.desk(dataset.n_vars)
    if cfg.mode is EnsembleMode.INDEPENDENT:
        models = train_members(dataset, hp, train_cfg, cfg.n_members, cfg.jobs)
        return [DeciduousBackend(model, x_eval, sign) for model in models]
    if pretrained is None:
        pretrained = train(dataset, hp, train_cfg)
    return backends_for_ensemble(pretrained, dataset, train_cfg, stein_cfg, cfg.n_members, x_eval)


def stats_fn_for(members: list, jobs: int = 1):
    """Closure for control_order: fresh ensemble statistics per step"""

    def stats_fn(step, remaining, removed):
        return ensemble_sigmas(members, remaining, removed, step=step, jobs=jobs)

    return stats_fn
