"""
Conditional samplers for the treatment given the confounders.
"""
from typing import Protocol

import numpy as np
from scipy.special import expit


class ConditionalSampler(Protocol):
    """Draws from P_T(X | Z = z); deterministic given the generator state."""

    def sample(self, z: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray: ...


class GaussianLinearSampler:
    """X | Z = z ~ N(intercept + coefficients . z[:k], noise_sd**2).

    Only the first len(coefficients) entries of z are used, so a sampler fitted
    on the relevant confounders ignores trailing null ones.
    """

    kind = "gaussian-linear"

    def __init__(self, coefficients, intercept: float = 0.0, noise_sd: float = 1.0):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.intercept = float(intercept)
        if noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        self.noise_sd = float(noise_sd)

    def mean(self, z: np.ndarray) -> float:
        k = self.coefficients.shape[0]
        return self.intercept + float(np.dot(self.coefficients, np.asarray(z, dtype=float)[:k]))

    def sample(self, z: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.mean(z) + self.noise_sd * rng.standard_normal(size)


class LogisticSampler:
    """Binary treatment: X | Z = z ~ Bernoulli(expit(intercept + coefficients . z[:k]))."""

    kind = "logistic"

    def __init__(self, coefficients, intercept: float = 0.0):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.intercept = float(intercept)

    def probability(self, z: np.ndarray) -> float:
        k = self.coefficients.shape[0]
        return float(expit(self.intercept + np.dot(self.coefficients, np.asarray(z, dtype=float)[:k])))

    def sample(self, z: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        return (rng.random(size) < self.probability(z)).astype(float)


class ConstantSampler:
    """Point mass at `value`."""

    kind = "constant"

    def __init__(self, value: float):
        self.value = float(value)

    def sample(self, z: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.value)
