"""
Elastic net service - cross-validated coordinate descent for V | X, Z models.

Objective on standardized features, intercept absorbed by centering:

    (1 / 2n) * ||y - Xb||^2 + lam * (mix * ||b||_1 + (1 - mix) / 2 * ||b||^2)
"""
import logging
from typing import NamedTuple

import numpy as np
from sklearn.model_selection import KFold

from cspcr.core.config import Settings
from cspcr.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    NonConvergenceError,
    SingularDesignError,
)
from cspcr.core.random import Stream, derive_seed, int32_seed
from cspcr.models.ratio import linear_predict
from cspcr.schemas.ratio import ElasticNetFit, GaussianLinearModel, Standardization

logger = logging.getLogger(__name__)

# relative slack on the per-sweep objective check
OBJECTIVE_SLACK = 1e-10
MIN_MIXING_FOR_GRID = 1e-3


class DescentResult(NamedTuple):
    coefficients: np.ndarray
    sweeps: int
    objective_trace: tuple[float, ...]


class PathResult(NamedTuple):
    coefficients: np.ndarray
    sweeps: int


class ElasticNetService:
    """Service for elastic-net fitting, lambda selection and prediction."""

    def __init__(self, settings: Settings):
        self.mixing = settings.enet_mixing
        self.n_lambdas = settings.enet_n_lambdas
        self.lambda_min_ratio = settings.enet_lambda_min_ratio
        self.folds = settings.enet_folds
        self.tol = settings.enet_tol
        self.max_sweeps = settings.enet_max_sweeps
        self.variance_floor = settings.enet_variance_floor

    # ============== Fitting ==============

    def fit_elastic_net(
        self,
        features: np.ndarray,
        response: np.ndarray,
        mixing: float | None = None,
        lambda_grid=None,
        folds: int | None = None,
        seed: int = 0,
    ) -> ElasticNetFit:
        """
        Fit with lambda chosen by minimum mean K-fold CV error.

        Without an explicit grid, 100 log-spaced values run from lambda_max
        (all coefficients zero) down to 1e-4 * lambda_max.
        """
        features, response = self._check_inputs(features, response)
        mixing = self.mixing if mixing is None else float(mixing)
        folds = self.folds if folds is None else int(folds)
        if not 0.0 <= mixing <= 1.0:
            raise ConfigurationError(f"Mixing must be in [0, 1], got {mixing}")
        rows = features.shape[0]
        if folds < 2:
            raise ConfigurationError("Cross-validation needs at least 2 folds")
        if rows < folds:
            raise ConfigurationError(f"Cannot split {rows} rows into {folds} folds")

        standardization = self.standardize(features)
        x_std = self._apply(features, standardization)
        y_centered = response - response.mean()
        if lambda_grid is None:
            grid = self.lambda_grid(x_std, y_centered, mixing)
        else:
            grid = np.sort(np.asarray(lambda_grid, dtype=float).reshape(-1))[::-1]
            if grid.size == 0 or np.any(grid < 0):
                raise ConfigurationError("Lambda grid must be nonempty and nonnegative")

        cv_errors = self._cv_errors(features, response, grid, mixing, folds, seed)
        chosen = int(np.argmin(cv_errors))
        path = self._path(x_std, y_centered, grid[: chosen + 1], mixing)
        model = self._to_model(
            path.coefficients, standardization, features, response, float(response.mean())
        )
        logger.info(
            "Elastic net chose lambda=%.4g (%d of %d), %d nonzero coefficients",
            grid[chosen], chosen + 1, grid.size, int(np.count_nonzero(model.coefficients)),
        )
        return ElasticNetFit(
            model=model,
            lambda_chosen=float(grid[chosen]),
            mixing=mixing,
            cv_folds=folds,
            standardization=standardization,
            lambda_grid=tuple(float(lam) for lam in grid),
            cv_errors=tuple(float(e) for e in cv_errors),
            sweeps=path.sweeps,
        )

    def refit(
        self,
        fit: ElasticNetFit,
        features: np.ndarray,
        response: np.ndarray,
    ) -> GaussianLinearModel:
        """Recompute a fit's model from its stored standardization and lambda."""
        features, response = self._check_inputs(features, response)
        grid = np.asarray(fit.lambda_grid, dtype=float)
        chosen = int(np.flatnonzero(grid == fit.lambda_chosen)[0])
        x_std = self._apply(features, fit.standardization)
        y_mean = float(response.mean())
        path = self._path(x_std, response - y_mean, grid[: chosen + 1], fit.mixing)
        return self._to_model(path.coefficients, fit.standardization, features, response, y_mean)

    def lambda_grid(self, x_std: np.ndarray, y_centered: np.ndarray, mixing: float) -> np.ndarray:
        """Log-spaced grid from lambda_max down to lambda_min_ratio * lambda_max."""
        rows = x_std.shape[0]
        lambda_max = float(
            np.max(np.abs(x_std.T @ y_centered), initial=0.0)
            / (rows * max(mixing, MIN_MIXING_FOR_GRID))
        )
        if lambda_max <= np.finfo(float).resolution:
            return np.array([0.0])
        return np.geomspace(lambda_max, lambda_max * self.lambda_min_ratio, num=self.n_lambdas)

    def coordinate_descent(
        self,
        x_std: np.ndarray,
        y_centered: np.ndarray,
        lam: float,
        mixing: float,
        start: np.ndarray | None = None,
    ) -> DescentResult:
        """Cyclic coordinate descent at one lambda using Gram-matrix updates."""
        rows, width = x_std.shape
        gram = x_std.T @ x_std / rows
        xy = x_std.T @ y_centered / rows
        yy = float(y_centered @ y_centered) / rows
        coef = np.zeros(width) if start is None else np.array(start, dtype=float)
        gram_coef = gram @ coef
        l1 = lam * mixing
        l2 = lam * (1.0 - mixing)

        def objective() -> float:
            quad = 0.5 * (yy - 2.0 * xy @ coef + coef @ gram_coef)
            return float(quad + l1 * np.abs(coef).sum() + 0.5 * l2 * coef @ coef)

        trace = [objective()]
        for sweep in range(1, self.max_sweeps + 1):
            max_update = 0.0
            for j in range(width):
                norm_j = gram[j, j]
                old = coef[j]
                if norm_j <= 0.0:
                    new = 0.0
                else:
                    rho = xy[j] - gram_coef[j] + norm_j * old
                    new = np.sign(rho) * max(abs(rho) - l1, 0.0) / (norm_j + l2)
                delta = new - old
                if delta != 0.0:
                    coef[j] = new
                    gram_coef += gram[:, j] * delta
                    max_update = max(max_update, abs(delta))
            trace.append(objective())
            if trace[-1] > trace[-2] + OBJECTIVE_SLACK * max(1.0, abs(trace[-2])):
                raise NonConvergenceError(
                    f"Elastic-net objective increased at sweep {sweep}", last_iterate=coef.copy()
                )
            if max_update < self.tol:
                return DescentResult(coef, sweep, tuple(trace))
        raise NonConvergenceError(
            f"Coordinate descent did not converge in {self.max_sweeps} sweeps at lambda={lam:.4g}",
            last_iterate=coef.copy(),
        )

    # ============== Prediction ==============

    @staticmethod
    def predict(model: GaussianLinearModel, features) -> float:
        """intercept + coefficients . features for a single feature vector."""
        features = np.asarray(features, dtype=float).reshape(-1)
        if features.shape[0] != len(model.coefficients):
            raise DimensionMismatchError(
                0, f"model expects {len(model.coefficients)} features, got {features.shape[0]}"
            )
        return float(linear_predict(model, features))

    # ============== Helpers ==============

    @staticmethod
    def standardize(features: np.ndarray) -> Standardization:
        """Column means and population standard deviations (1 for constant columns)."""
        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        scale = np.where(scale > 1e-12, scale, 1.0)
        return Standardization(
            mean=tuple(float(m) for m in mean), scale=tuple(float(s) for s in scale)
        )

    @staticmethod
    def _apply(features: np.ndarray, standardization: Standardization) -> np.ndarray:
        return (features - np.asarray(standardization.mean)) / np.asarray(standardization.scale)

    def _path(
        self,
        x_std: np.ndarray,
        y_centered: np.ndarray,
        lambdas: np.ndarray,
        mixing: float,
    ) -> PathResult:
        """Warm-started solutions along a decreasing grid; returns the last one."""
        coef = np.zeros(x_std.shape[1])
        sweeps = 0
        for lam in lambdas:
            result = self.coordinate_descent(x_std, y_centered, float(lam), mixing, start=coef)
            coef = result.coefficients
            sweeps += result.sweeps
        return PathResult(coef, sweeps)

    def _path_all(
        self,
        x_std: np.ndarray,
        y_centered: np.ndarray,
        lambdas: np.ndarray,
        mixing: float,
    ) -> np.ndarray:
        coefs = np.zeros((lambdas.size, x_std.shape[1]))
        coef = coefs[0]
        for i, lam in enumerate(lambdas):
            coef = self.coordinate_descent(x_std, y_centered, float(lam), mixing, start=coef)[0]
            coefs[i] = coef
        return coefs

    def _cv_errors(
        self,
        features: np.ndarray,
        response: np.ndarray,
        grid: np.ndarray,
        mixing: float,
        folds: int,
        seed: int,
    ) -> np.ndarray:
        splitter = KFold(
            n_splits=folds,
            shuffle=True,
            random_state=int32_seed(derive_seed(seed, Stream.FOLDS)),
        )
        errors = np.zeros(grid.size)
        for train, test in splitter.split(features):
            if train.size < 2 or test.size < 2:
                raise SingularDesignError(
                    f"Cross-validation fold has too few rows ({min(train.size, test.size)})"
                )
            standardization = self.standardize(features[train])
            x_train = self._apply(features[train], standardization)
            x_test = self._apply(features[test], standardization)
            y_mean = response[train].mean()
            coefs = self._path_all(x_train, response[train] - y_mean, grid, mixing)
            predictions = y_mean + x_test @ coefs.T
            errors += np.mean((response[test, None] - predictions) ** 2, axis=0)
        return errors / folds

    def _to_model(
        self,
        coef_std: np.ndarray,
        standardization: Standardization,
        features: np.ndarray,
        response: np.ndarray,
        y_mean: float,
    ) -> GaussianLinearModel:
        coefficients = coef_std / np.asarray(standardization.scale)
        intercept = y_mean - float(np.asarray(standardization.mean) @ coefficients)
        residuals = response - intercept - features @ coefficients
        nonzero = int(np.count_nonzero(coef_std))
        dof = max(1, features.shape[0] - nonzero - 1)
        noise_variance = max(float(residuals @ residuals) / dof, self.variance_floor)
        return GaussianLinearModel(
            coefficients=tuple(float(c) for c in coefficients),
            intercept=float(intercept),
            noise_variance=noise_variance,
        )

    @staticmethod
    def _check_inputs(features, response) -> tuple[np.ndarray, np.ndarray]:
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        response = np.asarray(response, dtype=float).reshape(-1)
        if features.shape[0] != response.shape[0]:
            raise DimensionMismatchError(
                0, f"{features.shape[0]} feature rows but {response.shape[0]} responses"
            )
        return features, response
