"""
Test statistics and control variates.

A statistic scores one row: it receives a vector of candidate treatments
(the observed value and its counterfeits) together with that row's y, z and
v, and returns one score per candidate. A control variate is evaluated on
whole columns: x of shape (n,), z of shape (n, p) and v of shape (n, d).
"""
from typing import Protocol

import numpy as np


class StatisticFn(Protocol):
    """Pure, reentrant scoring function T(x, y, z, v)."""

    def __call__(
        self,
        x: np.ndarray,
        y: float,
        z: np.ndarray,
        v: np.ndarray,
    ) -> np.ndarray: ...


class ControlVariateFn(Protocol):
    """Pure, reentrant control variate a(x, z, v)."""

    def __call__(self, x: np.ndarray, z: np.ndarray, v: np.ndarray) -> np.ndarray: ...


def y_times_x(x: np.ndarray, y: float, z: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Default statistic T = y * x. Ignores z and v."""
    return np.asarray(y * np.asarray(x, dtype=float), dtype=float)


def first_surrogate(x: np.ndarray, z: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Default control variate: the first surrogate coordinate."""
    return np.asarray(v, dtype=float)[:, 0]


class CovariateColumn:
    """Control variate reading one named covariate column (z_i or v_i, 1-based)."""

    def __init__(self, name: str):
        role, _, index = name.partition("_")
        if role not in {"z", "v"} or not index.isdigit() or int(index) < 1:
            raise ValueError(f"Control variate column must look like z_<i> or v_<i>, got {name!r}")
        self.name = name
        self.role = role
        self.index = int(index) - 1

    def __call__(self, x: np.ndarray, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        block = np.asarray(z if self.role == "z" else v, dtype=float)
        if self.index >= block.shape[1]:
            raise ValueError(f"Column {self.name} does not exist")
        return block[:, self.index]


class ConstantControlVariate:
    """a(x, z, v) = c. Turns the augmentation off when the weights are constant."""

    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def __call__(self, x: np.ndarray, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(x).shape[0], self.value)


class SurrogateRank:
    """
    Per-label control variate a_l = 1{surrogate label = l}.

    The surrogate column stands in for y: it is scored against the row's
    counterfeits with the test statistic and binned into L labels like the
    outcome. The labels are drawn by the engine, which owns the randomness.
    """

    def __init__(self, name: str = "v_1"):
        role, _, index = name.partition("_")
        if role != "v" or not index.isdigit() or int(index) < 1:
            raise ValueError(f"Surrogate column must look like v_<i>, got {name!r}")
        self.name = name
        self.index = int(index) - 1

    def outcome(self, v: np.ndarray) -> np.ndarray:
        """The surrogate column that replaces y when labeling."""
        block = np.asarray(v, dtype=float)
        if self.index >= block.shape[1]:
            raise ValueError(f"Column {self.name} does not exist")
        return block[:, self.index]
