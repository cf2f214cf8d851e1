"""
Exception hierarchy for the scino-order pipeline.

Every error carries the process exit code the CLI maps it to.
"""

from typing import Any, Optional


class ScinoError(Exception):
    """Base class for all pipeline failures"""

    exit_code = 1


class ConfigError(ScinoError, ValueError):
    """Invalid configuration file, flag or dataclass field"""

    exit_code = 2


class DataError(ScinoError, ValueError):
    """Malformed dataset, graph, checkpoint or shape mismatch"""

    exit_code = 3


class NumericError(ScinoError, ArithmeticError):
    """Non-finite values or a failed linear solve"""

    exit_code = 4


class TrainingDivergedError(NumericError):
    """Loss became non-finite; ``model`` holds the last-good parameters"""

    def __init__(self, message: str, model: Optional[Any] = None, epoch: Optional[int] = None):
        super().__init__(message)
        self.model = model
        self.epoch = epoch


class DegenerateDenominatorError(NumericError):
    """|d S_l / d x_l| too close to zero for a residue term"""

    def __init__(self, node: int, magnitude: float):
        super().__init__(
            f"degenerate residue denominator for node {node}: |dS_l/dx_l| = {magnitude:.3e}"
        )
        self.node = node
        self.magnitude = magnitude


class ProviderError(ScinoError):
    """Remote prior provider unreachable or returned a malformed payload"""

    exit_code = 5
