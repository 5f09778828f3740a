"""
Weighting service - importance-weighted label sums, covariance estimates and
control-variate augmentation.
"""
import logging

import numpy as np

from cspcr.core.config import Settings
from cspcr.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    NonFiniteError,
    PopulationMismatchError,
)
from cspcr.models.enums import GammaEstimator, Population
from cspcr.models.statistic import ControlVariateFn
from cspcr.schemas.dataset import UnlabeledPool
from cspcr.schemas.gchisq import CovMatrix
from cspcr.schemas.report import WeightDiagnostics

logger = logging.getLogger(__name__)


class WeightingService:
    """Service for the weighted Pearson statistic and its covariance."""

    def __init__(self, settings: Settings):
        self.variance_floor = settings.gamma_variance_floor

    # ============== Label Sums ==============

    @staticmethod
    def weighted_label_sums(labels, weights, l: int) -> tuple[np.ndarray, np.ndarray]:  # noqa: E741
        """W_l = sum of weights with label l; D_l = sum of squared weights with label l."""
        labels = np.asarray(labels, dtype=int).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if labels.shape[0] != weights.shape[0]:
            raise DimensionMismatchError(
                0, f"{labels.shape[0]} labels but {weights.shape[0]} weights"
            )
        if labels.size and (labels.min() < 1 or labels.max() > l):
            raise ConfigurationError(f"Labels must lie in [1, {l}]")
        if np.any(weights < 0):
            raise ConfigurationError("Importance weights must be nonnegative")
        w_sums = np.bincount(labels - 1, weights=weights, minlength=l).astype(float)
        d_sums = np.bincount(labels - 1, weights=weights**2, minlength=l).astype(float)
        return w_sums, d_sums

    @staticmethod
    def omega_hat(d_sums, n: int, l: int) -> CovMatrix:  # noqa: E741
        """(L / n) diag(D) - J / L."""
        if n < 1:
            raise ConfigurationError("n must be at least 1")
        d_sums = np.asarray(d_sums, dtype=float)
        return CovMatrix(entries=(l / n) * np.diag(d_sums) - np.full((l, l), 1.0 / l))

    @staticmethod
    def self_normalized_omega(d_sums, n: int, l: int) -> CovMatrix:  # noqa: E741
        """
        P Omega-hat P with P = I - J / L.

        Weights rescaled to mean 1 make the label sums add up to n exactly,
        so the centered sums live in the sum-zero subspace.
        """
        omega = WeightingService.omega_hat(d_sums, n, l).entries
        projection = np.eye(l) - np.full((l, l), 1.0 / l)
        return CovMatrix(entries=projection @ omega @ projection)

    @staticmethod
    def null_projection(l: int) -> CovMatrix:  # noqa: E741
        """I - J / L, the covariance of the unweighted statistic under no shift."""
        return CovMatrix(entries=np.eye(l) - np.full((l, l), 1.0 / l))

    @staticmethod
    def u_statistic(w_sums, n: int, l: int) -> float:  # noqa: E741
        """(L / n) * sum_l (W_l - n / L)^2."""
        w_sums = np.asarray(w_sums, dtype=float)
        if w_sums.shape[0] != l:
            raise DimensionMismatchError(0, f"expected {l} label sums, got {w_sums.shape[0]}")
        centered = w_sums - n / l
        return float((l / n) * centered @ centered)

    # ============== Control Variates ==============

    @staticmethod
    def label_indicators(labels, l: int) -> np.ndarray:  # noqa: E741
        """n x L matrix of 1{label_j = l}."""
        labels = np.asarray(labels, dtype=int).reshape(-1)
        if labels.size and (labels.min() < 1 or labels.max() > l):
            raise ConfigurationError(f"Labels must lie in [1, {l}]")
        return (labels[:, None] == np.arange(1, l + 1)[None, :]).astype(float)

    @staticmethod
    def control_matrix(a_values, n: int, l: int) -> np.ndarray:  # noqa: E741
        """
        Control variate as an L x n matrix.

        A single column serves every label; an n x L block gives label l
        its own column a_l.
        """
        a_values = np.asarray(a_values, dtype=float)
        if a_values.ndim == 2 and a_values.shape[1] > 1:
            if a_values.shape != (n, l):
                raise DimensionMismatchError(
                    0, f"control variate must have 1 or {l} columns and {n} rows"
                )
            return a_values.T
        a_values = a_values.reshape(-1)
        if a_values.shape[0] != n:
            raise DimensionMismatchError(0, f"{a_values.shape[0]} control variate values, {n} rows")
        return np.broadcast_to(a_values, (l, n))

    def fit_gamma(
        self,
        labels,
        weights,
        a_values,
        ell: int,
        estimator: GammaEstimator = GammaEstimator.COVARIANCE,
    ) -> float:
        """
        Control-variate coefficient for label `ell`.

        covariance: Cov(w 1{label = ell}, w a) / Var(w a), sample moments.
        weighted-regression: slope of 1{label = ell} on a, both centered by
        their w-weighted means, weighted by w.
        Returns 0 when the denominator is below the variance floor. With an
        n x L control variate, column `ell` is used.
        """
        labels = np.asarray(labels, dtype=int).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        a_values = np.asarray(a_values, dtype=float)
        if a_values.ndim == 2 and a_values.shape[1] > 1:
            if not 1 <= ell <= a_values.shape[1]:
                raise DimensionMismatchError(0, f"no control variate column for label {ell}")
            a_values = a_values[:, ell - 1]
        a_values = a_values.reshape(-1)
        if not labels.shape[0] == weights.shape[0] == a_values.shape[0]:
            raise DimensionMismatchError(0, "labels, weights and control variate differ in length")
        if labels.shape[0] < 2:
            raise ConfigurationError("Need at least 2 rows to estimate gamma")
        indicator = (labels == ell).astype(float)

        if estimator == GammaEstimator.WEIGHTED_REGRESSION:
            total = weights.sum()
            if total <= 0:
                return 0.0
            ind_c = indicator - (weights @ indicator) / total
            a_c = a_values - (weights @ a_values) / total
            denominator = float((weights * a_c) @ a_c)
            if denominator < self.variance_floor:
                return 0.0
            return float((weights * ind_c) @ a_c) / denominator

        wa = weights * a_values
        variance = float(np.var(wa, ddof=1))
        if variance < self.variance_floor:
            return 0.0
        covariance = float(np.cov(weights * indicator, wa, ddof=1)[0, 1])
        return covariance / variance

    @classmethod
    def enhanced_sums(
        cls,
        labels,
        weights,
        a_values,
        gamma,
        a_target_mean,
        n: int,
        l: int,  # noqa: E741
    ) -> tuple[np.ndarray, np.ndarray]:
        """
        Augmented sums W~ and the L x n contribution matrix.

        Entry (l, j) is w_j (1{label_j = l} - gamma_l a_lj) + gamma_l E_T[a_l];
        W~_l is the row sum. `a_target_mean` is one value or one per label.
        """
        labels = np.asarray(labels, dtype=int).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        gamma = np.asarray(gamma, dtype=float).reshape(-1)
        if gamma.shape[0] != l or labels.shape[0] != n:
            raise DimensionMismatchError(0, "gamma must have L entries and labels n entries")
        a_matrix = cls.control_matrix(a_values, n, l)
        target = cls._per_label(a_target_mean, l)
        indicators = cls.label_indicators(labels, l).T
        contribution = (
            weights[None, :] * (indicators - gamma[:, None] * a_matrix)
            + (gamma * target)[:, None]
        )
        return contribution.sum(axis=1), contribution

    @classmethod
    def self_normalized_contributions(
        cls,
        contribution,
        weights,
        gamma,
        a_target_mean,
        l: int,  # noqa: E741
    ) -> np.ndarray:
        """
        Contributions recentred for mean-one weights.

        Subtracts (w_j - 1)(1 / L - gamma_l E_T[a_l]) from entry (l, j), so
        `omega_tilde` of the result is the covariance of the augmented sums
        once the weights are rescaled to average 1. With gamma = 0 this gives
        `self_normalized_omega`.
        """
        contribution = np.asarray(contribution, dtype=float)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        gamma = np.asarray(gamma, dtype=float).reshape(-1)
        center = 1.0 / l - gamma * cls._per_label(a_target_mean, l)
        return contribution - (weights[None, :] - 1.0) * center[:, None]

    @staticmethod
    def omega_tilde(contribution, n: int, l: int) -> CovMatrix:  # noqa: E741
        """(L / n) (C - J / L)(C - J / L)^T for the L x n contribution matrix C."""
        contribution = np.asarray(contribution, dtype=float)
        if contribution.shape != (l, n):
            raise DimensionMismatchError(0, f"contribution matrix must be {l} x {n}")
        centered = contribution - 1.0 / l
        return CovMatrix(entries=(l / n) * centered @ centered.T)

    @classmethod
    def target_mean_covariance(cls, gamma, pool_values, n: int, l: int) -> np.ndarray:  # noqa: E741
        """
        L (n / n_t) Gamma Cov_T(a) Gamma.

        Covariance added to Omega-tilde when E_T[a] is the mean of n_t pool
        rows rather than a known constant.
        """
        gamma = np.asarray(gamma, dtype=float).reshape(-1)
        pool_matrix = cls.control_matrix(pool_values, np.asarray(pool_values).shape[0], l)
        n_t = pool_matrix.shape[1]
        if n_t < 2:
            return np.zeros((l, l))
        covariance = np.atleast_2d(np.cov(pool_matrix, ddof=1))
        return l * (n / n_t) * np.outer(gamma, gamma) * covariance

    @staticmethod
    def control_values(target_pool: UnlabeledPool, a: ControlVariateFn) -> np.ndarray:
        """The control variate evaluated on a target pool."""
        if target_pool.population != Population.TARGET:
            raise PopulationMismatchError("target", target_pool.population.value)
        if target_pool.n == 0:
            raise ConfigurationError("Target pool is empty")
        values = np.asarray(a(target_pool.x, target_pool.z, target_pool.v), dtype=float)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise NonFiniteError(int(bad[0]), "control variate")
        return values

    @classmethod
    def estimate_target_mean_a(cls, target_pool: UnlabeledPool, a: ControlVariateFn) -> float:
        """Sample mean of the control variate over a target pool."""
        return float(cls.control_values(target_pool, a).mean())

    @staticmethod
    def _per_label(value, l: int) -> np.ndarray:  # noqa: E741
        value = np.asarray(value, dtype=float).reshape(-1)
        if value.shape[0] not in (1, l):
            raise DimensionMismatchError(0, f"expected 1 or {l} target means, got {value.shape[0]}")
        return np.broadcast_to(value, (l,))

    # ============== Diagnostics ==============

    @staticmethod
    def diagnostics(weights, clamp_count: int = 0) -> WeightDiagnostics:
        """Mean, max and effective sample size (sum w)^2 / sum w^2."""
        weights = np.asarray(weights, dtype=float)
        squares = float(weights @ weights)
        ess = float(weights.sum() ** 2 / squares) if squares > 0 else 0.0
        return WeightDiagnostics(
            weight_mean=float(weights.mean()),
            weight_max=float(weights.max()),
            ess=ess,
            clamp_count=clamp_count,
        )
