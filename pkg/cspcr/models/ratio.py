"""
Density ratio models e(x, z, v) = P_T(x, z, v) / P_S(x, z, v).

Every model is immutable and evaluates whole columns at once: x of shape (n,),
z of shape (n, p) and v of shape (n, d). Models work in log space and are
clamped to [clamp_min, clamp_max] on exponentiation; the number of clamped
entries is returned alongside the values.
"""
import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from cspcr.core.exceptions import DimensionMismatchError, NumericalError
from cspcr.models.enums import RatioProvenance
from cspcr.schemas.ratio import ClassifierRatio, GaussianLinearModel
from cspcr.schemas.simulation import DgpParams

DEFAULT_CLAMP = (1e-12, 1e12)


class RatioEvaluation(NamedTuple):
    values: np.ndarray
    clamp_count: int


def clamp_log_ratio(log_values: np.ndarray, clamp: tuple[float, float]) -> RatioEvaluation:
    """Exponentiate log-ratios inside the clamp bounds and count clamped entries."""
    log_values = np.asarray(log_values, dtype=float)
    bad = np.flatnonzero(np.isnan(log_values))
    if bad.size:
        raise NumericalError(f"Density ratio is not finite at row {int(bad[0])}")
    lo, hi = math.log(clamp[0]), math.log(clamp[1])
    clamped = (log_values < lo) | (log_values > hi)
    values = np.exp(np.clip(log_values, lo, hi))
    return RatioEvaluation(values=values, clamp_count=int(clamped.sum()))


def gaussian_log_ratio(v, mean_t, var_t, mean_s, var_s) -> np.ndarray:
    """log of phi(v; mean_t, var_t) / phi(v; mean_s, var_s)."""
    return norm.logpdf(v, loc=mean_t, scale=np.sqrt(var_t)) - norm.logpdf(
        v, loc=mean_s, scale=np.sqrt(var_s)
    )


def linear_predict(model: GaussianLinearModel, features: np.ndarray) -> np.ndarray:
    """intercept + features @ coefficients, for one row or a matrix of rows."""
    features = np.asarray(features, dtype=float)
    coefficients = np.asarray(model.coefficients, dtype=float)
    width = features.shape[-1] if features.ndim else 0
    if width != coefficients.shape[0]:
        raise DimensionMismatchError(
            0, f"model expects {coefficients.shape[0]} features, got {width}"
        )
    return model.intercept + features @ coefficients


class RatioModel(ABC):
    """Evaluable density ratio."""

    provenance: RatioProvenance

    def __init__(self, clamp: tuple[float, float] = DEFAULT_CLAMP):
        self.clamp = clamp

    @abstractmethod
    def log_ratio(self, x: np.ndarray, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Unclamped log e(x, z, v), one value per row."""

    def evaluate(self, x: np.ndarray, z: np.ndarray, v: np.ndarray) -> RatioEvaluation:
        return clamp_log_ratio(self.log_ratio(x, z, v), self.clamp)

    def __call__(self, x: np.ndarray, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.evaluate(x, z, v).values


class ConstantRatio(RatioModel):
    """e = value everywhere; value 1 means no shift."""

    provenance = RatioProvenance.USER_SUPPLIED

    def __init__(self, value: float = 1.0, clamp: tuple[float, float] = DEFAULT_CLAMP):
        if not value > 0:
            raise ValueError("constant ratio must be positive")
        super().__init__(clamp)
        self.value = float(value)

    def log_ratio(self, x, z, v) -> np.ndarray:
        return np.full(np.asarray(x).shape[0], math.log(self.value))


class PrecomputedRatio(RatioModel):
    """Weights read from a data column, aligned with the dataset rows.

    Values are used as given (zero allowed) and never clamped.
    """

    provenance = RatioProvenance.USER_SUPPLIED

    def __init__(self, weights):
        super().__init__()
        weights = np.array(weights, dtype=float).reshape(-1)
        bad = np.flatnonzero(~np.isfinite(weights) | (weights < 0))
        if bad.size:
            raise NumericalError(
                f"Weight at row {int(bad[0])} must be finite and nonnegative"
            )
        weights.setflags(write=False)
        self.weights = weights

    def log_ratio(self, x, z, v) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self._aligned(x))

    def evaluate(self, x, z, v) -> RatioEvaluation:
        return RatioEvaluation(values=self._aligned(x).copy(), clamp_count=0)

    def _aligned(self, x) -> np.ndarray:
        n = np.asarray(x).shape[0]
        if n != self.weights.shape[0]:
            raise DimensionMismatchError(
                0, f"{self.weights.shape[0]} weights supplied for {n} rows"
            )
        return self.weights


class ClassifierDensityRatio(RatioModel):
    """prior_correction * p / (1 - p) for the fitted target-class probability p."""

    provenance = RatioProvenance.CLASSIFIER

    def __init__(self, fit: ClassifierRatio, clamp: tuple[float, float] = DEFAULT_CLAMP):
        super().__init__(clamp)
        self.fit = fit
        self._coefficients = np.asarray(fit.coefficients, dtype=float)

    def features(self, x, z, v) -> np.ndarray:
        columns = [np.asarray(x, dtype=float).reshape(-1, 1), np.asarray(z, dtype=float)]
        if self.fit.covariates == "xzv":
            columns.append(np.asarray(v, dtype=float))
        return np.hstack(columns)

    def log_ratio(self, x, z, v) -> np.ndarray:
        design = self.features(x, z, v)
        if design.shape[1] != self._coefficients.shape[0]:
            raise DimensionMismatchError(
                0,
                f"classifier expects {self._coefficients.shape[0]} covariates, got {design.shape[1]}",
            )
        # log(p / (1 - p)) is the linear predictor itself
        return math.log(self.fit.prior_correction) + self.fit.intercept + design @ self._coefficients


class FactorizedRatio(RatioModel):
    """xz_factor(x, z) times a product of per-coordinate Gaussian V | X, Z ratios."""

    provenance = RatioProvenance.FACTORIZED

    def __init__(
        self,
        xz_factor: RatioModel,
        v_source: Sequence[GaussianLinearModel],
        v_target: Sequence[GaussianLinearModel],
        clamp: tuple[float, float] = DEFAULT_CLAMP,
    ):
        if len(v_source) != len(v_target):
            raise ValueError("need one source and one target model per surrogate coordinate")
        super().__init__(clamp)
        self.xz_factor = xz_factor
        self.v_source = tuple(v_source)
        self.v_target = tuple(v_target)

    def v_log_ratio(self, x, z, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[1] != len(self.v_source):
            raise DimensionMismatchError(
                0, f"ratio models {len(self.v_source)} surrogates, data has {v.shape[1]}"
            )
        features = np.column_stack([np.asarray(x, dtype=float), np.asarray(z, dtype=float)])
        total = np.zeros(v.shape[0])
        for c, (source, target) in enumerate(zip(self.v_source, self.v_target, strict=True)):
            total += gaussian_log_ratio(
                v[:, c],
                linear_predict(target, features),
                target.noise_variance,
                linear_predict(source, features),
                source.noise_variance,
            )
        return total

    def log_ratio(self, x, z, v) -> np.ndarray:
        return self.xz_factor.log_ratio(x, z, v) + self.v_log_ratio(x, z, v)


class ShiftedMeanZRatio(RatioModel):
    """phi(z_r; mu_t 1, I) / phi(z_r; mu_s 1, I) over the first p confounders."""

    provenance = RatioProvenance.ANALYTIC

    def __init__(
        self,
        p: int,
        mean_source: float,
        mean_target: float,
        clamp: tuple[float, float] = DEFAULT_CLAMP,
    ):
        super().__init__(clamp)
        self.p = p
        self.mean_source = float(mean_source)
        self.mean_target = float(mean_target)

    def log_ratio(self, x, z, v) -> np.ndarray:
        z_r = np.asarray(z, dtype=float)[:, : self.p]
        return (
            0.5 * ((z_r - self.mean_source) ** 2 - (z_r - self.mean_target) ** 2).sum(axis=1)
        )


class AnalyticDgpRatio(RatioModel):
    """Exact ratio of the two-population Gaussian simulation design.

    The X | Z and null-confounder laws are shared by both populations and
    cancel; what remains is the relevant-confounder factor and the V | X, Z factor.
    """

    provenance = RatioProvenance.ANALYTIC

    def __init__(self, params: DgpParams, clamp: tuple[float, float] = DEFAULT_CLAMP):
        super().__init__(clamp)
        self.params = params
        self.z_factor = ShiftedMeanZRatio(
            params.p, params.z_mean_source, params.z_mean_target, clamp
        )

    def v_mean(self, x, z_r, v_coef, a) -> np.ndarray:
        theta = self.params.theta_nl
        return z_r @ np.asarray(v_coef) + (1.0 - theta) * a * x + theta * a * np.sin(x)

    def log_ratio(self, x, z, v) -> np.ndarray:
        params = self.params
        x = np.asarray(x, dtype=float)
        z_r = np.asarray(z, dtype=float)[:, : params.p]
        v1 = np.asarray(v, dtype=float)[:, 0]
        mean_t = self.v_mean(x, z_r, params.v_t, params.a_t)
        mean_s = self.v_mean(x, z_r, params.v_s, params.a_s)
        return self.z_factor.log_ratio(x, z, v) + gaussian_log_ratio(v1, mean_t, 1.0, mean_s, 1.0)
