"""
Test configuration schema.
"""
from typing import ClassVar

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cspcr.models.enums import GammaEstimator, TestMethod


class TestConfig(BaseModel):
    """Parameters of one test run. M = K*L - 1 counterfeits per row."""

    __test__: ClassVar[bool] = False

    model_config = ConfigDict(frozen=True)

    k: int = Field(50, ge=1)
    l: int = Field(3, ge=2)  # noqa: E741
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    method: TestMethod = TestMethod.CSPCR
    seed: int = Field(0, ge=0, lt=2**64)
    m_resample: int | None = Field(None, ge=1)
    gamma_estimator: GammaEstimator = GammaEstimator.COVARIANCE
    normalize_weights: bool = True

    @model_validator(mode="after")
    def validate_counterfeits(self) -> "TestConfig":
        if self.k * self.l - 1 < 1:
            raise ValueError("K*L - 1 must be at least 1")
        return self

    @property
    def m(self) -> int:
        """Number of counterfeits per row."""
        return self.k * self.l - 1
