"""
Ratio-estimation schemas and model files.
"""
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

# ============== Fitted Models ==============


class GaussianLinearModel(BaseModel):
    """Conditional Gaussian: response ~ N(intercept + coefficients . features, noise_variance)."""

    model_config = ConfigDict(frozen=True)

    coefficients: tuple[float, ...]
    intercept: float
    noise_variance: float = Field(..., gt=0.0)


class Standardization(BaseModel):
    """Per-feature centering and scaling applied before fitting."""

    model_config = ConfigDict(frozen=True)

    mean: tuple[float, ...]
    scale: tuple[float, ...]

    @model_validator(mode="after")
    def validate_lengths(self) -> "Standardization":
        if len(self.mean) != len(self.scale):
            raise ValueError("mean and scale differ in length")
        if any(s <= 0 for s in self.scale):
            raise ValueError("scales must be positive")
        return self


class ElasticNetFit(BaseModel):
    """Cross-validated elastic-net fit."""

    model_config = ConfigDict(frozen=True)

    model: GaussianLinearModel
    lambda_chosen: float = Field(..., ge=0.0)
    mixing: float = Field(..., ge=0.0, le=1.0)
    cv_folds: int
    standardization: Standardization
    lambda_grid: tuple[float, ...]
    cv_errors: tuple[float, ...]
    sweeps: int = 0

    @model_validator(mode="after")
    def validate_lambda(self) -> "ElasticNetFit":
        if self.lambda_chosen not in self.lambda_grid:
            raise ValueError("lambda_chosen must belong to the searched grid")
        return self


class ClassifierRatio(BaseModel):
    """Logistic classifier of target-vs-source turned into a density ratio."""

    model_config = ConfigDict(frozen=True)

    coefficients: tuple[float, ...]
    intercept: float
    prior_correction: float = Field(..., gt=0.0)
    covariates: Literal["xz", "xzv"] = "xz"
    iterations: int = 0


# ============== Model Files ==============


class RatioModelFile(BaseModel):
    """JSON-serialized density ratio consumed by `cspcr test --ratio-model`."""

    schema_version: Literal[1] = 1
    mode: Literal["classifier", "factorized"]
    xz_factor: ClassifierRatio | None = None
    v_source: list[ElasticNetFit] = Field(default_factory=list)
    v_target: list[ElasticNetFit] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_parts(self) -> "RatioModelFile":
        if self.mode == "classifier" and self.xz_factor is None:
            raise ValueError("classifier mode requires xz_factor")
        if self.mode == "factorized" and (
            not self.v_source or len(self.v_source) != len(self.v_target)
        ):
            raise ValueError("factorized mode requires one source and one target fit per surrogate")
        return self


class SamplerModelFile(BaseModel):
    """JSON-serialized X | Z model consumed by `cspcr test --sampler-model`."""

    schema_version: Literal[1] = 1
    kind: Literal["gaussian-linear", "logistic"]
    coefficients: list[float]
    intercept: float = 0.0
    noise_sd: float = Field(1.0, ge=0.0)
