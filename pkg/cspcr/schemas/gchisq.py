"""
Generalized chi-squared schemas.
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class CovMatrix(BaseModel):
    """Symmetrized L x L covariance matrix."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _symmetrize(cls, value):
        matrix = np.array(value, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("covariance matrix must be square")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("covariance matrix has non-finite entries")
        matrix = (matrix + matrix.T) / 2.0
        matrix.setflags(write=False)
        return matrix


class SpectralWeights(BaseModel):
    """Eigenvalues defining sum_i lambda_i * chi2_1."""

    model_config = ConfigDict(frozen=True)

    lambdas: tuple[float, ...]
    clipped_mass: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def validate_lambdas(self) -> "SpectralWeights":
        if any(lam < 0 for lam in self.lambdas):
            raise ValueError("spectral weights must be nonnegative")
        if any(a < b for a, b in zip(self.lambdas, self.lambdas[1:], strict=False)):
            raise ValueError("spectral weights must be nonincreasing")
        return self
