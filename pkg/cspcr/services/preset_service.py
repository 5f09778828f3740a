"""
Preset service - named experiment grids and command-line overrides.
"""
from collections.abc import Mapping

from pydantic import ValidationError

from cspcr.core.exceptions import ConfigurationError
from cspcr.models.enums import ControlVariateKind, RatioMode, TestMethod
from cspcr.schemas.config import TestConfig
from cspcr.schemas.simulation import (
    CONFIG_SWEEP_FIELDS,
    VECTOR_FIELDS,
    DgpParams,
    ExperimentGrid,
    SweepSpec,
)

NULL_SHIFT = {"a_s": 1.0, "a_t": 0.0, "beta_indirect": 1.0, "gamma_direct": 0.0}
ALTERNATIVE = {"a_s": 0.0, "a_t": 2.0, "beta_indirect": 2.0, "gamma_direct": 0.0}
COMPARED = (TestMethod.CSPCR, TestMethod.CSPCR_PE, TestMethod.IS)


class PresetSpec:
    """Base parameters, sweep and methods of one named experiment."""

    def __init__(
        self,
        description: str,
        base: Mapping[str, float],
        sweep: str,
        values: tuple[float, ...],
        methods: tuple[TestMethod, ...],
        ratio_mode: RatioMode,
    ):
        self.description = description
        self.base = dict(base)
        self.sweep = sweep
        self.values = values
        self.methods = methods
        self.ratio_mode = ratio_mode


PRESETS: dict[str, PresetSpec] = {
    "typei-vs-ne": PresetSpec(
        "Type-I error versus ratio-estimation pool size",
        NULL_SHIFT,
        "n_pool",
        (100.0, 250.0, 500.0, 1000.0, 2000.0),
        COMPARED,
        RatioMode.ESTIMATED,
    ),
    "typei-vs-beta": PresetSpec(
        "Type-I error versus the indirect effect beta",
        NULL_SHIFT,
        "beta_indirect",
        (0.0, 0.5, 1.0, 1.5, 2.0),
        COMPARED,
        RatioMode.ESTIMATED,
    ),
    "power-vs-beta": PresetSpec(
        "Power versus the indirect effect beta",
        ALTERNATIVE,
        "beta_indirect",
        (0.0, 0.5, 1.0, 1.4, 2.0),
        COMPARED,
        RatioMode.ESTIMATED,
    ),
    "power-vs-gamma": PresetSpec(
        "Power versus the direct effect gamma at beta = 2",
        ALTERNATIVE,
        "gamma_direct",
        (0.0, 0.25, 0.5, 0.75, 1.0),
        COMPARED,
        RatioMode.ESTIMATED,
    ),
    "power-vs-theta": PresetSpec(
        "Power versus the nonlinear share theta of the X -> V effect",
        ALTERNATIVE,
        "theta_nl",
        (0.0, 0.25, 0.5, 0.75, 1.0),
        COMPARED,
        RatioMode.ESTIMATED,
    ),
    "l-sweep": PresetSpec(
        "csPCR Type-I error versus the number of labels L",
        NULL_SHIFT,
        "l",
        (2.0, 3.0, 5.0, 10.0, 15.0, 20.0),
        (TestMethod.CSPCR,),
        RatioMode.ANALYTIC,
    ),
    "l-power": PresetSpec(
        "csPCR and csPCR-pe power versus the number of labels L",
        ALTERNATIVE,
        "l",
        (2.0, 3.0, 5.0, 10.0, 15.0, 20.0),
        (TestMethod.CSPCR, TestMethod.CSPCR_PE),
        RatioMode.ANALYTIC,
    ),
    "pcr-inflation": PresetSpec(
        "Naive PCR versus csPCR under the covariate-shift null",
        NULL_SHIFT,
        "beta_indirect",
        (0.5, 1.0, 1.5, 2.0),
        (TestMethod.PCR, TestMethod.CSPCR),
        RatioMode.ANALYTIC,
    ),
}


class PresetService:
    """Service turning preset names and overrides into experiment grids."""

    def __init__(self, presets: Mapping[str, PresetSpec] | None = None):
        self.presets = dict(PRESETS if presets is None else presets)

    def names(self) -> list[str]:
        return sorted(self.presets)

    def build(
        self,
        name: str,
        reps: int,
        config: TestConfig,
        overrides: Mapping[str, str] | None = None,
        ratio_mode: RatioMode | None = None,
        control_variate: ControlVariateKind = ControlVariateKind.SURROGATE_RANK,
    ) -> ExperimentGrid:
        """Grid for preset `name`, with DgpParams fields overridden from strings."""
        preset = self.presets.get(name)
        if preset is None:
            raise ConfigurationError(
                f"Unknown preset {name!r}; choose one of {', '.join(self.names())}"
            )
        base = dict(preset.base)
        for key, raw in (overrides or {}).items():
            base[key] = self.parse_override(key, raw)
        try:
            return ExperimentGrid(
                base=DgpParams(**base),
                sweep=SweepSpec(param=preset.sweep, values=preset.values),
                methods=preset.methods,
                reps=reps,
                ratio_mode=ratio_mode or preset.ratio_mode,
                control_variate=control_variate,
                config=config,
            )
        except ValidationError as exc:
            raise ConfigurationError(f"Invalid experiment settings: {exc}") from exc

    @staticmethod
    def parse_override(key: str, raw: str) -> float | tuple[float, ...]:
        """Parse a KEY=VALUE override; vector fields take comma-separated values."""
        if key in CONFIG_SWEEP_FIELDS or key not in DgpParams.model_fields:
            raise ConfigurationError(f"Unknown simulation parameter {key!r}")
        try:
            if key in VECTOR_FIELDS:
                return tuple(float(part) for part in raw.split(","))
            return float(raw)
        except ValueError as exc:
            raise ConfigurationError(f"Cannot parse {key}={raw!r}") from exc
