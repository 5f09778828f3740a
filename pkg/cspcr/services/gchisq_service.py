"""
Generalized chi-squared service - null law of x'x for x ~ N(0, Omega).

The law is the lambda-weighted sum of independent 1-df chi-squares, lambda
being the eigenvalues of Omega. CDF and quantiles use the three-cumulant
(Hall-Buckley-Eagleson) shifted gamma match; `mc_quantile` is the Monte Carlo
cross-check.
"""
import logging
import math
from typing import NamedTuple

import numpy as np
from scipy import optimize
from scipy.stats import gamma

from cspcr.core.config import Settings
from cspcr.core.exceptions import AllZeroWeightsError, ConfigurationError
from cspcr.core.random import Stream, substream
from cspcr.schemas.gchisq import CovMatrix, SpectralWeights

logger = logging.getLogger(__name__)

MIN_MC_DRAWS = 10_000


class GammaMatch(NamedTuple):
    shape: float
    scale: float
    shift: float


class Decision(NamedTuple):
    threshold: float
    p_value: float
    reject: bool


class GChiSqService:
    """Spectral weights, CDF, quantiles and p-values of the generalized chi-squared law."""

    def __init__(self, settings: Settings):
        self.eigen_clip_rel = settings.eigen_clip_rel
        self.tol = settings.quantile_tol
        self.span_sds = settings.quantile_span_sds
        self.mc_chunk = settings.mc_chunk
        self.mc_draws = settings.mc_draws

    def spectral_weights(self, omega: CovMatrix) -> SpectralWeights:
        """Clipped, nonincreasing eigenvalues of the symmetrized matrix."""
        eigenvalues = np.linalg.eigvalsh(omega.entries)
        eps = self.eigen_clip_rel * max(1.0, float(np.max(np.abs(eigenvalues), initial=0.0)))
        negative = eigenvalues <= -eps
        clipped_mass = float(-eigenvalues[negative].sum())
        kept = np.where(eigenvalues >= eps, eigenvalues, 0.0)
        if clipped_mass > 0:
            logger.warning(
                "Clipped %d negative eigenvalue(s), mass %.3g", int(negative.sum()), clipped_mass
            )
        return SpectralWeights(
            lambdas=tuple(float(lam) for lam in np.sort(kept)[::-1]),
            clipped_mass=clipped_mass,
        )

    @staticmethod
    def gamma_match(weights: SpectralWeights) -> GammaMatch:
        """Shifted gamma law with the first three cumulants of the weighted sum."""
        lambdas = np.array([lam for lam in weights.lambdas if lam > 0], dtype=float)
        if lambdas.size == 0:
            raise AllZeroWeightsError()
        k1 = lambdas.sum()
        k2 = 2.0 * np.sum(lambdas**2)
        k3 = 8.0 * np.sum(lambdas**3)
        scale = k3 / (2.0 * k2)
        shape = 4.0 * k2**3 / k3**2
        # shift >= 0 by Cauchy-Schwarz; clamp rounding noise
        shift = max(0.0, float(k1 - shape * scale))
        return GammaMatch(shape=float(shape), scale=float(scale), shift=shift)

    def cdf(self, weights: SpectralWeights, x: float) -> float:
        """Approximate P(sum lambda_i chi2_1 <= x)."""
        match = self.gamma_match(weights)
        return float(gamma.cdf(x - match.shift, a=match.shape, scale=match.scale))

    def p_value(self, weights: SpectralWeights, statistic: float) -> float:
        """Upper-tail probability 1 - cdf(statistic)."""
        match = self.gamma_match(weights)
        return float(gamma.sf(statistic - match.shift, a=match.shape, scale=match.scale))

    def quantile(self, weights: SpectralWeights, prob: float) -> float:
        """x with cdf(x) = prob, by bracketing and bisection."""
        if not 0.0 < prob < 1.0:
            raise ConfigurationError(f"Quantile probability must be in (0, 1), got {prob}")
        lambdas = np.asarray(weights.lambdas, dtype=float)
        if not np.any(lambdas > 0):
            raise AllZeroWeightsError()
        c1 = float(lambdas.sum())
        c2 = float(2.0 * np.sum(lambdas**2))
        hi = c1 + self.span_sds * math.sqrt(c2)
        while self.cdf(weights, hi) < prob:
            hi *= 2.0
        return float(
            optimize.bisect(
                lambda x: self.cdf(weights, x) - prob,
                0.0,
                hi,
                xtol=self.tol * 1e-4,
                maxiter=500,
            )
        )

    def decide(self, weights: SpectralWeights, statistic: float, alpha: float) -> Decision:
        """
        Threshold, p-value and decision from the same spectral weights.

        The threshold is nudged onto the statistic when the bisection tolerance
        would otherwise let `statistic >= threshold` disagree with `p <= alpha`.
        """
        threshold = self.quantile(weights, 1.0 - alpha)
        p_value = min(1.0, max(0.0, self.p_value(weights, statistic)))
        reject = p_value <= alpha
        if reject and statistic < threshold:
            threshold = float(statistic)
        elif not reject and statistic >= threshold:
            threshold = float(np.nextafter(statistic, np.inf))
        return Decision(threshold=threshold, p_value=p_value, reject=reject)

    def mc_quantile(
        self,
        weights: SpectralWeights,
        prob: float,
        draws: int | None = None,
        seed: int = 0,
    ) -> float:
        """
        Empirical prob-quantile of sum lambda_i g_i^2 over `draws` normal draws.

        `draws` defaults to the `mc_draws` setting.
        """
        draws = self.mc_draws if draws is None else draws
        if draws < MIN_MC_DRAWS:
            raise ConfigurationError(f"Monte Carlo quantile needs at least {MIN_MC_DRAWS} draws")
        lambdas = np.asarray(weights.lambdas, dtype=float)
        if not np.any(lambdas > 0):
            return 0.0
        rng = substream(seed, Stream.MONTE_CARLO)
        chunks = []
        remaining = draws
        while remaining > 0:
            size = min(self.mc_chunk, remaining)
            chunks.append(rng.standard_normal((size, lambdas.size)) ** 2 @ lambdas)
            remaining -= size
        return float(np.quantile(np.concatenate(chunks), prob))
