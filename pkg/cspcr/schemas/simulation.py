"""
Simulation schemas: data-generating parameters, experiment grids and result rows.
"""
import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cspcr.models.enums import ControlVariateKind, RatioMode, TestMethod
from cspcr.schemas.config import TestConfig

VECTOR_FIELDS = ("u", "v_s", "v_t", "v_outcome")
CONFIG_SWEEP_FIELDS = ("k", "l", "alpha")


class DgpParams(BaseModel):
    """Parameters of the two-population Gaussian data-generating process.

    Unspecified coefficient vectors default to ones / sqrt(p).
    """

    model_config = ConfigDict(frozen=True)

    p: int = Field(5, ge=1)
    q: int = Field(50, ge=0)
    u: tuple[float, ...]
    v_s: tuple[float, ...]
    v_t: tuple[float, ...]
    v_outcome: tuple[float, ...]
    a_s: float = 1.0
    a_t: float = 0.0
    theta_nl: float = Field(0.0, ge=0.0, le=1.0)
    beta_indirect: float = 1.0
    gamma_direct: float = 0.0
    n_labeled: int = Field(500, ge=1)
    n_pool: int = Field(1000, ge=1)
    z_mean_source: float = 0.0
    z_mean_target: float = 1.0
    z_null_mean: float = 0.1

    @model_validator(mode="before")
    @classmethod
    def _default_vectors(cls, data):
        if isinstance(data, dict):
            p = int(data.get("p", 5))
            filled = dict(data)
            for name in VECTOR_FIELDS:
                if filled.get(name) is None:
                    filled[name] = (1.0 / math.sqrt(p),) * p
            return filled
        return data

    @model_validator(mode="after")
    def validate_lengths(self) -> "DgpParams":
        for name in VECTOR_FIELDS:
            if len(getattr(self, name)) != self.p:
                raise ValueError(f"{name} must have length p={self.p}")
        return self

    def with_value(self, name: str, value) -> "DgpParams":
        return DgpParams.model_validate({**self.model_dump(), name: value})


class SweepSpec(BaseModel):
    """Named parameter and the values it takes."""

    model_config = ConfigDict(frozen=True)

    param: str
    values: tuple[float, ...] = Field(..., min_length=1)

    @field_validator("values")
    @classmethod
    def validate_finite(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        if not all(math.isfinite(v) for v in values):
            raise ValueError("sweep values must be finite")
        return values

    @model_validator(mode="after")
    def validate_param(self) -> "SweepSpec":
        allowed = set(DgpParams.model_fields) - set(VECTOR_FIELDS) | set(CONFIG_SWEEP_FIELDS)
        if self.param not in allowed:
            raise ValueError(f"cannot sweep {self.param!r}; choose one of {sorted(allowed)}")
        return self


class ExperimentGrid(BaseModel):
    """A Monte Carlo experiment: base parameters, one swept parameter, methods."""

    model_config = ConfigDict(frozen=True)

    base: DgpParams
    sweep: SweepSpec
    methods: tuple[TestMethod, ...] = Field(..., min_length=1)
    reps: int = Field(..., ge=1)
    ratio_mode: RatioMode = RatioMode.ANALYTIC
    control_variate: ControlVariateKind = ControlVariateKind.SURROGATE_RANK
    config: TestConfig

    def cell(self, value: float) -> tuple[DgpParams, TestConfig]:
        """Parameters and config at one sweep value."""
        if self.sweep.param in CONFIG_SWEEP_FIELDS:
            config = TestConfig.model_validate({**self.config.model_dump(), self.sweep.param: value})
            return self.base, config
        return self.base.with_value(self.sweep.param, value), self.config


class TrialOutcome(BaseModel):
    """Decisions of one trial; a method maps to None when it errored."""

    model_config = ConfigDict(frozen=True)

    decisions: dict[TestMethod, bool | None]
    errors: dict[TestMethod, str] = Field(default_factory=dict)
    clamped_rows: int = Field(0, ge=0)


class RejectionRateRow(BaseModel):
    """One cell of the rejection-rate table."""

    model_config = ConfigDict(frozen=True)

    sweep_param: str
    sweep_value: float
    method: TestMethod
    reps: int
    reject_rate: float
    mc_se: float
    errors_count: int
