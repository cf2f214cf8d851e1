"""
Closed-form score models for oracle checks. They expose the same
``derivatives`` interface as TrainedScoreModel, so the deciduous formulas
and the ordering loop run on them unchanged.
"""

from typing import Callable, Sequence

import numpy as np

from diffcore.hyperdual import HyperDualResult, hyperdual_eval
from diffcore.ops import NumpyOps

numpy_ops = NumpyOps()


class AnalyticScoreModel:
    def __init__(self, score_fn: Callable, n_vars: int):
        """``score_fn(ops, x)`` maps an (N, D) input to the (N, D) score"""
        self.score_fn = score_fn
        self.n_vars = n_vars

    def score_at(self, x: np.ndarray) -> np.ndarray:
        return self.score_fn(numpy_ops, np.atleast_2d(np.asarray(x, dtype=np.float64)))

    def derivatives(self, x: np.ndarray, dir_a: int, dir_b: int) -> HyperDualResult:
        return hyperdual_eval(self.score_fn, np.atleast_2d(np.asarray(x, dtype=np.float64)), dir_a, dir_b)

    def hessian_diag(self, x: np.ndarray, nodes: Sequence[int]) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.stack([self.derivatives(x, j, j).d_a[:, j] for j in nodes], axis=1)


def _noise_vector(noise_std, n_vars: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(noise_std, dtype=np.float64), (n_vars,)).copy()


def linear_gaussian_precision(weights: np.ndarray, noise_std=1.0) -> np.ndarray:
    """Precision of x = W^T x + e, e ~ N(0, diag(sigma^2)); W[i, j] is the weight of i -> j"""
    weights = np.asarray(weights, dtype=np.float64)
    n_vars = weights.shape[0]
    residual = np.eye(n_vars) - weights
    return residual @ np.diag(1.0 / _noise_vector(noise_std, n_vars) ** 2) @ residual.T


def linear_gaussian_covariance(weights: np.ndarray, noise_std=1.0) -> np.ndarray:
    return np.linalg.inv(linear_gaussian_precision(weights, noise_std))


def linear_gaussian_score(weights: np.ndarray, noise_std=1.0) -> AnalyticScoreModel:
    theta = linear_gaussian_precision(weights, noise_std)
    return AnalyticScoreModel(lambda ops, x: ops.mul(ops.matmul_t(x, theta), -1.0), theta.shape[0])


def marginal_gaussian_score(weights: np.ndarray, keep: Sequence[int], noise_std=1.0) -> Callable:
    """Score of the marginal over ``keep`` as a function of the full x"""
    keep = list(keep)
    sigma = linear_gaussian_covariance(weights, noise_std)
    theta_keep = np.linalg.inv(sigma[np.ix_(keep, keep)])
    return lambda x: -np.atleast_2d(x)[:, keep] @ theta_keep


def quadratic_anm_score(noise_std: float = 1.0) -> AnalyticScoreModel:
    """x1 ~ N(0, s^2), x2 = x1^2 + N(0, s^2)"""
    inv_var = 1.0 / noise_std**2

    def score_fn(ops, x):
        x1 = ops.slice_last(x, 0, 1)
        x2 = ops.slice_last(x, 1, 2)
        residual = ops.sub(x2, ops.mul(x1, x1))
        s1 = ops.mul(ops.sub(ops.mul(ops.mul(x1, residual), 2.0), x1), inv_var)
        s2 = ops.mul(residual, -inv_var)
        return ops.concat([s1, s2], axis=-1)

    return AnalyticScoreModel(score_fn, 2)
