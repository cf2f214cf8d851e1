"""
Deciduous score and Hessian diagonal: the score of the marginal density
after removing leaves, rebuilt from the full-D score and its derivatives.

For remaining j and removed l, with s = +1 (ResidueSign.PAPER) or -1 (ResidueSign.CORRECTED):

    S_j(x_-R) = S_j + s * sum_l dS_l/dx_j * S_l / (dS_l/dx_l)

    D_j(x_-R) = dS_j/dx_j + s * sum_l [ d2S_l/dx_j2 * S_l / q_l
                                      + (dS_l/dx_j)^2 / q_l
                                      - dS_l/dx_j * S_l * d2S_l/dx_j dx_l / q_l^2 ]
    with q_l = dS_l/dx_l.

The sum is exact when no removed node is an ancestor of another removed
node; with nested removals it is a first-order approximation.
"""

from typing import Dict, List, Protocol, Sequence, Tuple

import numpy as np

from diffcore.hyperdual import HyperDualResult
from errors import DataError, DegenerateDenominatorError
from ordering.schema import ResidueSign

DENOMINATOR_TOL = 1e-8


class ScoreModel(Protocol):
    n_vars: int

    def derivatives(self, x: np.ndarray, dir_a: int, dir_b: int) -> HyperDualResult: ...


class _PassCache:
    """One hyper-dual pass per ordered direction pair (a, b)"""

    def __init__(self, model: ScoreModel, x: np.ndarray):
        self.model = model
        self.x = x
        self._passes: Dict[Tuple[int, int], HyperDualResult] = {}

    def get(self, a: int, b: int) -> HyperDualResult:
        key = (a, b)
        if key not in self._passes:
            self._passes[key] = self.model.derivatives(self.x, a, b)
        return self._passes[key]


def _split(model: ScoreModel, x: np.ndarray, removed: Sequence[int]) -> Tuple[np.ndarray, List[int], List[int]]:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n_vars = model.n_vars
    removed = [int(l) for l in removed]
    if len(set(removed)) != len(removed) or any(l < 0 or l >= n_vars for l in removed):
        raise DataError(f"invalid removed set {removed} for {n_vars} variables")
    remaining = [j for j in range(n_vars) if j not in set(removed)]
    if not remaining:
        raise DataError("removed set must leave at least one node")
    return x, remaining, removed


def _denominator(cache: _PassCache, l: int) -> np.ndarray:
    q = cache.get(l, l).d_a[:, l]
    smallest = float(np.min(np.abs(q)))
    if smallest < DENOMINATOR_TOL:
        raise DegenerateDenominatorError(l, smallest)
    return q


def deciduous_score(model: ScoreModel, x, removed: Sequence[int], sign: ResidueSign = ResidueSign.CORRECTED):
    """(N, |remaining|) deciduous scores; columns follow ascending node index"""
    x, remaining, removed = _split(model, x, removed)
    cache = _PassCache(model, x)
    s = ResidueSign(sign).factor
    denominators = {l: _denominator(cache, l) for l in removed}

    out = np.empty((x.shape[0], len(remaining)))
    for k, j in enumerate(remaining):
        jj = cache.get(j, j)
        value = jj.value[:, j].copy()
        for l in removed:
            value += s * jj.d_a[:, l] * jj.value[:, l] / denominators[l]
        out[:, k] = value
    return out


def deciduous_hessian_diag(model: ScoreModel, x, removed: Sequence[int], sign: ResidueSign = ResidueSign.CORRECTED):
    """(N, |remaining|) derivative of the deciduous score along its own coordinate"""
    x, remaining, removed = _split(model, x, removed)
    cache = _PassCache(model, x)
    s = ResidueSign(sign).factor
    denominators = {l: _denominator(cache, l) for l in removed}

    out = np.empty((x.shape[0], len(remaining)))
    for k, j in enumerate(remaining):
        jj = cache.get(j, j)
        value = jj.d_a[:, j].copy()
        for l in removed:
            q = denominators[l]
            S_l = jj.value[:, l]
            dS_l = jj.d_a[:, l]
            d2S_l_jj = jj.d_ab[:, l]
            d2S_l_jl = cache.get(j, l).d_ab[:, l]
            value += s * (d2S_l_jj * S_l / q + dS_l**2 / q - dS_l * S_l * d2S_l_jl / q**2)
        out[:, k] = value
    return out
