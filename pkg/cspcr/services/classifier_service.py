"""
Classifier service - maximum-likelihood logistic regression by IRLS.

Used for the probabilistic-classification density ratio (label 1 = target
row, 0 = source row) and for binary-treatment samplers.
"""
import logging
from typing import NamedTuple

import numpy as np
from scipy import linalg
from scipy.special import expit

from cspcr.core.config import Settings
from cspcr.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    SeparationError,
    SingularDesignError,
)
from cspcr.schemas.ratio import ClassifierRatio

logger = logging.getLogger(__name__)

SEPARATION_MARGIN = 1e-6


class LogisticResult(NamedTuple):
    intercept: float
    coefficients: np.ndarray
    iterations: int
    log_likelihood: float


class ClassifierService:
    """Service for logistic fits."""

    def __init__(self, settings: Settings):
        self.jitter = settings.logistic_jitter
        self.tol = settings.logistic_tol
        self.max_iter = settings.logistic_max_iter

    def fit_logistic(self, features: np.ndarray, labels: np.ndarray, seed: int = 0) -> ClassifierRatio:
        """
        Fit P(target | covariates) and wrap it as a density-ratio classifier.

        The fit is deterministic; `seed` is accepted for a uniform fitting
        interface. prior_correction = n_source / n_target.
        """
        labels = np.asarray(labels, dtype=float).reshape(-1)
        result = self.irls(features, labels)
        n_target = int(labels.sum())
        n_source = labels.shape[0] - n_target
        return ClassifierRatio(
            coefficients=tuple(float(c) for c in result.coefficients),
            intercept=result.intercept,
            prior_correction=n_source / n_target,
            iterations=result.iterations,
        )

    def irls(self, features: np.ndarray, labels: np.ndarray) -> LogisticResult:
        """Newton-Raphson / iteratively reweighted least squares with ridge jitter."""
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        labels = np.asarray(labels, dtype=float).reshape(-1)
        rows, width = features.shape
        if labels.shape[0] != rows:
            raise DimensionMismatchError(0, f"{rows} feature rows but {labels.shape[0]} labels")
        if not np.all((labels == 0) | (labels == 1)):
            raise ConfigurationError("Logistic labels must be 0 or 1")
        positives = int(labels.sum())
        if positives == 0 or positives == rows:
            raise SingularDesignError("Both classes must be present to fit a classifier")
        if rows < width + 2:
            raise ConfigurationError(
                f"Need at least {width + 2} rows to fit {width} covariates and an intercept"
            )

        design = np.column_stack([np.ones(rows), features])
        beta = np.zeros(width + 1)
        ridge = self.jitter * np.eye(width + 1)
        previous = -np.inf
        log_likelihood = previous
        iteration = 0
        for iteration in range(1, self.max_iter + 1):
            eta = design @ beta
            prob = expit(eta)
            hessian = design.T @ (design * (prob * (1.0 - prob))[:, None]) + ridge
            gradient = design.T @ (labels - prob)
            beta = beta + linalg.solve(hessian, gradient, assume_a="pos")

            eta = design @ beta
            prob = expit(eta)
            self._check_separation(labels, prob)
            log_likelihood = float(np.sum(labels * eta - np.logaddexp(0.0, eta)))
            if abs(log_likelihood - previous) < self.tol:
                break
            previous = log_likelihood
        else:
            logger.warning(
                "Logistic fit stopped after %d iterations without meeting tolerance", self.max_iter
            )

        logger.info("Logistic fit converged in %d iterations, loglik=%.6g", iteration, log_likelihood)
        return LogisticResult(
            intercept=float(beta[0]),
            coefficients=beta[1:],
            iterations=iteration,
            log_likelihood=log_likelihood,
        )

    @staticmethod
    def _check_separation(labels: np.ndarray, prob: np.ndarray) -> None:
        correct = np.where(labels == 1, prob > 1.0 - SEPARATION_MARGIN, prob < SEPARATION_MARGIN)
        if np.all(correct):
            raise SeparationError()
