"""
Test report schemas and the JSON report file.
"""
from typing import ClassVar

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cspcr.models.enums import TestMethod
from cspcr.schemas.gchisq import SpectralWeights

# ============== Engine Output ==============


class LabelSummary(BaseModel):
    """Per-label weighted sums, squared-weight sums and augmentation terms."""

    model_config = ConfigDict(frozen=True)

    W: tuple[float, ...]
    D: tuple[float, ...]
    W_tilde: tuple[float, ...] | None = None
    gamma_hat: tuple[float, ...] | None = None
    contribution_matrix: tuple[tuple[float, ...], ...] | None = None
    a_target_mean: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def validate_sums(self) -> "LabelSummary":
        if len(self.W) != len(self.D):
            raise ValueError("W and D differ in length")
        if any(w < 0 for w in self.W) or any(d < 0 for d in self.D):
            raise ValueError("label sums must be nonnegative")
        return self


class WeightDiagnostics(BaseModel):
    """Importance-weight health indicators."""

    model_config = ConfigDict(frozen=True)

    weight_mean: float
    weight_max: float
    ess: float
    clamp_count: int = 0


class TestReport(BaseModel):
    """Outcome of one test run."""

    __test__: ClassVar[bool] = False

    model_config = ConfigDict(frozen=True)

    method: TestMethod
    n: int
    k: int
    l: int  # noqa: E741
    alpha: float
    seed: int
    statistic: float
    threshold: float
    p_value: float = Field(..., ge=0.0, le=1.0)
    reject: bool
    labels: tuple[int, ...]
    per_label: LabelSummary
    spectral: SpectralWeights
    diagnostics: WeightDiagnostics

    @model_validator(mode="after")
    def validate_decision(self) -> "TestReport":
        if self.reject != (self.statistic >= self.threshold):
            raise ValueError("reject must equal statistic >= threshold")
        if self.reject != (self.p_value <= self.alpha):
            raise ValueError("reject must equal p_value <= alpha")
        return self


# ============== Report File ==============


class PerLabelFile(BaseModel):
    W: list[float]
    D: list[float]
    W_tilde: list[float] | None = None
    gamma: list[float] | None = None
    a_target_mean: list[float] | None = None


class SpectralFile(BaseModel):
    lambdas: list[float]
    clipped_mass: float


class ReportFile(BaseModel):
    """JSON document written by `cspcr test`."""

    model_config = ConfigDict(populate_by_name=True)

    method: TestMethod
    n: int
    k: int = Field(..., alias="K")
    l: int = Field(..., alias="L")  # noqa: E741
    alpha: float
    seed: int
    statistic_U: float
    threshold: float
    p_value: float
    reject: bool
    per_label: PerLabelFile
    spectral: SpectralFile
    diagnostics: WeightDiagnostics

    @classmethod
    def from_report(cls, report: TestReport) -> "ReportFile":
        summary = report.per_label
        return cls(
            method=report.method,
            n=report.n,
            k=report.k,
            l=report.l,
            alpha=report.alpha,
            seed=report.seed,
            statistic_U=report.statistic,
            threshold=report.threshold,
            p_value=report.p_value,
            reject=report.reject,
            per_label=PerLabelFile(
                W=list(summary.W),
                D=list(summary.D),
                W_tilde=list(summary.W_tilde) if summary.W_tilde is not None else None,
                gamma=list(summary.gamma_hat) if summary.gamma_hat is not None else None,
                a_target_mean=(
                    list(summary.a_target_mean) if summary.a_target_mean is not None else None
                ),
            ),
            spectral=SpectralFile(
                lambdas=list(report.spectral.lambdas),
                clipped_mass=report.spectral.clipped_mass,
            ),
            diagnostics=report.diagnostics,
        )

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, exclude_none=True, indent=2)
