"""
Dataset schemas: labeled source rows and unlabeled covariate pools.

Numeric blocks are stored as read-only float arrays; shapes are checked at
construction, finiteness is checked by `DatasetService.validate_dataset`.
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from cspcr.models.enums import Population


def _frozen_vector(value) -> np.ndarray:
    array = np.array(value, dtype=float).reshape(-1)
    array.setflags(write=False)
    return array


def _frozen_matrix(value) -> np.ndarray:
    array = np.array(value, dtype=float)
    if array.ndim == 1:
        array = array.reshape(-1, 1) if array.size else array.reshape(0, 0)
    if array.ndim != 2:
        raise ValueError("expected a 2-d array")
    array.setflags(write=False)
    return array


# ============== Row Schemas ==============

class LabeledSample(BaseModel):
    """One labeled source observation (y, x, z, v)."""

    model_config = ConfigDict(frozen=True)

    y: float
    x: float
    z: tuple[float, ...]
    v: tuple[float, ...]


# ============== Collection Schemas ==============

class SourceDataset(BaseModel):
    """The n labeled source rows a test runs on."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray
    v: np.ndarray

    @field_validator("y", "x", mode="before")
    @classmethod
    def _vector(cls, value):
        return _frozen_vector(value)

    @field_validator("z", "v", mode="before")
    @classmethod
    def _matrix(cls, value):
        return _frozen_matrix(value)

    @model_validator(mode="after")
    def _row_counts(self) -> "SourceDataset":
        n = self.y.shape[0]
        for name in ("x", "z", "v"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} has {getattr(self, name).shape[0]} rows, y has {n}")
        return self

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.z.shape[1])

    @property
    def d(self) -> int:
        return int(self.v.shape[1])

    def take(self, indices) -> "SourceDataset":
        """Rows at `indices`, in the given order."""
        idx = np.asarray(indices, dtype=int)
        return SourceDataset(y=self.y[idx], x=self.x[idx], z=self.z[idx], v=self.v[idx])


class UnlabeledPool(BaseModel):
    """Unlabeled (x, z, v) rows from one population."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    population: Population
    x: np.ndarray
    z: np.ndarray
    v: np.ndarray

    @field_validator("x", mode="before")
    @classmethod
    def _vector(cls, value):
        return _frozen_vector(value)

    @field_validator("z", "v", mode="before")
    @classmethod
    def _matrix(cls, value):
        return _frozen_matrix(value)

    @model_validator(mode="after")
    def _row_counts(self) -> "UnlabeledPool":
        n = self.x.shape[0]
        for name in ("z", "v"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} has {getattr(self, name).shape[0]} rows, x has {n}")
        return self

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def features(self) -> np.ndarray:
        """Design matrix [x, z] used by ratio and sampler fits."""
        return np.column_stack([self.x, self.z])
