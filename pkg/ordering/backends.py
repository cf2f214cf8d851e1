"""
Hessian-diagonal backends for the ordering loop.

    DeciduousBackend  one trained model, residue updates on full-D inputs
    SteinBackend      kernel estimator re-run on the remaining columns
    RetrainBackend    drop the leaf column and train a fresh network
    ProbedBackend     drop the leaf column and re-probe the frozen trunk
"""

from typing import List, Optional, Protocol, Sequence

import numpy as np

from diffusion.trainer import TrainConfig, TrainedScoreModel, train
from logger_config import ordering_logger
from ordering.deciduous import ScoreModel, deciduous_hessian_diag
from ordering.schema import Backend, HessianDiagTable, OrderingConfig, ResidueSign, Strategy
from scino.hyperparams import HyperParams
from stein.estimator import SteinConfig, stein_hessian_diag
from stein.probing import probe_final_layer
from utils.seeding import substream


class HessianBackend(Protocol):
    def table(self, step: int, remaining: Sequence[int], removed: Sequence[int]) -> HessianDiagTable: ...


def evaluation_rows(values: np.ndarray, max_rows: Optional[int], seed: int = 0) -> np.ndarray:
    """All rows, or a seeded subset of ``max_rows`` rows in original order"""
    if max_rows is None or values.shape[0] <= max_rows:
        return values
    rng = substream(seed, "eval")
    idx = np.sort(rng.choice(values.shape[0], size=max_rows, replace=False))
    return values[idx]


class DeciduousBackend:
    def __init__(self, model: ScoreModel, x_eval: np.ndarray, sign: ResidueSign = ResidueSign.CORRECTED):
        self.model = model
        self.x_eval = np.asarray(x_eval, dtype=np.float64)
        self.sign = ResidueSign(sign)

    def table(self, step, remaining, removed) -> HessianDiagTable:
        estimates = deciduous_hessian_diag(self.model, self.x_eval, removed, self.sign)
        return HessianDiagTable(step, sorted(remaining), estimates)


class SteinBackend:
    def __init__(self, values: np.ndarray, stein_cfg: SteinConfig = SteinConfig()):
        self.values = np.asarray(values, dtype=np.float64)
        self.stein_cfg = stein_cfg

    def table(self, step, remaining, removed) -> HessianDiagTable:
        nodes = sorted(remaining)
        return HessianDiagTable(step, nodes, stein_hessian_diag(self.values[:, nodes], self.stein_cfg))


class RetrainBackend:
    def __init__(
        self,
        dataset,
        hp: HyperParams,
        train_cfg: TrainConfig,
        x_eval: np.ndarray,
        initial: Optional[TrainedScoreModel] = None,
    ):
        self.dataset = dataset
        self.hp = hp
        self.train_cfg = train_cfg
        self.x_eval = np.asarray(x_eval, dtype=np.float64)
        self.initial = initial

    def table(self, step, remaining, removed) -> HessianDiagTable:
        nodes = sorted(remaining)
        if step == 0 and self.initial is not None:
            model = self.initial
        else:
            ordering_logger.info(f"Retraining on {len(nodes)} remaining columns (step {step})")
            model = train(self.dataset.select(nodes), self.hp.with_vars(len(nodes)), self.train_cfg, member=step)
        local = list(range(len(nodes)))
        return HessianDiagTable(step, nodes, model.hessian_diag(self.x_eval[:, nodes], local))


class ProbedBackend:
    def __init__(
        self,
        pretrained: TrainedScoreModel,
        dataset,
        train_cfg: TrainConfig,
        x_eval: np.ndarray,
        stein_cfg: SteinConfig = SteinConfig(),
        member: int = 0,
        reinit_head: bool = False,
    ):
        self.pretrained = pretrained
        self.dataset = dataset
        self.train_cfg = train_cfg
        self.x_eval = np.asarray(x_eval, dtype=np.float64)
        self.stein_cfg = stein_cfg
        self.member = member
        self.reinit_head = reinit_head

    def probe(self, remaining: Sequence[int]) -> TrainedScoreModel:
        return probe_final_layer(
            self.pretrained,
            sorted(remaining),
            self.dataset,
            self.train_cfg,
            self.stein_cfg,
            member=self.member,
            reinit_head=self.reinit_head,
        )

    def table(self, step, remaining, removed) -> HessianDiagTable:
        nodes = sorted(remaining)
        probed = self.probe(nodes)
        return HessianDiagTable(step, nodes, probed.hessian_diag(self.x_eval, nodes))


def make_backend(
    cfg: OrderingConfig,
    dataset,
    model: Optional[TrainedScoreModel] = None,
    hp: Optional[HyperParams] = None,
    train_cfg: TrainConfig = TrainConfig(),
    stein_cfg: SteinConfig = SteinConfig(),
) -> HessianBackend:
    """Build the backend ``cfg`` asks for, training a model when one is needed and not given"""
    x_eval = evaluation_rows(dataset.values, cfg.max_eval_samples, train_cfg.seed)
    if cfg.backend is Backend.STEIN:
        return SteinBackend(dataset.values, stein_cfg)

    hp = hp or HyperParams.desk(dataset.n_vars)
    if cfg.backend is Backend.DIFFUSION and cfg.strategy is Strategy.DROP_COLUMN:
        return RetrainBackend(dataset, hp, train_cfg, x_eval, initial=model)

    if model is None:
        model = train(dataset, hp, train_cfg)
    if cfg.backend is Backend.DIFFUSION:
        return DeciduousBackend(model, x_eval, cfg.residue_sign)
    return ProbedBackend(model, dataset, train_cfg, x_eval, stein_cfg)


def backends_for_ensemble(
    pretrained: TrainedScoreModel, dataset, train_cfg: TrainConfig, stein_cfg: SteinConfig, n_members: int,
    x_eval: np.ndarray,
) -> List[ProbedBackend]:
    """M probed heads on one frozen trunk, each head re-initialized from its member seed"""
    return [
        ProbedBackend(pretrained, dataset, train_cfg, x_eval, stein_cfg, member=m, reinit_head=True)
        for m in range(n_members)
    ]
