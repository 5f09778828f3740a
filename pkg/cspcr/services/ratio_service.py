"""
Ratio service - build, fit and (de)serialize density ratios and treatment samplers.
"""
import logging
import math
from collections.abc import Sequence
from typing import Literal

import numpy as np

from cspcr.core.config import Settings
from cspcr.core.exceptions import ConfigurationError, PopulationMismatchError
from cspcr.core.random import Stream, derive_seed
from cspcr.models.enums import Population
from cspcr.models.ratio import (
    AnalyticDgpRatio,
    ClassifierDensityRatio,
    ConstantRatio,
    FactorizedRatio,
    RatioEvaluation,
    RatioModel,
    clamp_log_ratio,
    gaussian_log_ratio,
)
from cspcr.models.sampler import ConditionalSampler, GaussianLinearSampler, LogisticSampler
from cspcr.schemas.dataset import UnlabeledPool
from cspcr.schemas.ratio import (
    ClassifierRatio,
    ElasticNetFit,
    RatioModelFile,
    SamplerModelFile,
)
from cspcr.schemas.simulation import DgpParams
from cspcr.services.classifier_service import ClassifierService
from cspcr.services.elastic_net_service import ElasticNetService

logger = logging.getLogger(__name__)

RatioMode = Literal["classifier", "factorized"]


class RatioService:
    """Service for density-ratio construction and estimation."""

    def __init__(
        self,
        settings: Settings,
        elastic_net_service: ElasticNetService,
        classifier_service: ClassifierService,
    ):
        self.clamp = (settings.ratio_clamp_min, settings.ratio_clamp_max)
        self.elastic_net_service = elastic_net_service
        self.classifier_service = classifier_service

    # ============== Closed-form Ratios ==============

    def conditional_gaussian_ratio(
        self,
        v: float,
        mean_t: float,
        var_t: float,
        mean_s: float,
        var_s: float,
    ) -> float:
        """phi(v; mean_t, var_t) / phi(v; mean_s, var_s), clamped."""
        if not (var_t > 0 and var_s > 0):
            raise ConfigurationError("Conditional variances must be positive")
        log_value = gaussian_log_ratio(np.array([v]), mean_t, var_t, mean_s, var_s)
        return float(clamp_log_ratio(log_value, self.clamp).values[0])

    def analytic_dgp_ratio(self, params: DgpParams) -> RatioModel:
        return AnalyticDgpRatio(params, clamp=self.clamp)

    def classifier_ratio_eval(
        self,
        ratio: ClassifierRatio,
        x: np.ndarray,
        z: np.ndarray,
        v: np.ndarray | None = None,
    ) -> RatioEvaluation:
        """prior_correction * p / (1 - p), clamped, with the clamp count."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = np.asarray(z, dtype=float).reshape(x.shape[0], -1)
        if v is None:
            v = np.zeros((x.shape[0], 0))
        return ClassifierDensityRatio(ratio, clamp=self.clamp).evaluate(x, z, v)

    def build_factorized_ratio(
        self,
        xz_factor: RatioModel,
        fit_s: ElasticNetFit | Sequence[ElasticNetFit],
        fit_t: ElasticNetFit | Sequence[ElasticNetFit],
    ) -> RatioModel:
        """xz_factor times the per-coordinate Gaussian V | X, Z ratio of two fits."""
        fits_s = [fit_s] if isinstance(fit_s, ElasticNetFit) else list(fit_s)
        fits_t = [fit_t] if isinstance(fit_t, ElasticNetFit) else list(fit_t)
        if len(fits_s) != len(fits_t):
            raise ConfigurationError("Source and target need one V fit per surrogate coordinate")
        for source, target in zip(fits_s, fits_t, strict=True):
            if len(source.model.coefficients) != len(target.model.coefficients):
                raise ConfigurationError("Source and target V fits use different feature sets")
        return FactorizedRatio(
            xz_factor,
            [fit.model for fit in fits_s],
            [fit.model for fit in fits_t],
            clamp=self.clamp,
        )

    # ============== Estimation ==============

    def fit_v_models(self, pool: UnlabeledPool, seed: int) -> list[ElasticNetFit]:
        """Elastic-net fit of each surrogate coordinate on [x, z]."""
        features = pool.features()
        return [
            self.elastic_net_service.fit_elastic_net(
                features,
                pool.v[:, c],
                seed=derive_seed(seed, Stream.FOLDS, self._population_key(pool), c),
            )
            for c in range(pool.v.shape[1])
        ]

    def fit_classifier(
        self,
        source_pool: UnlabeledPool,
        target_pool: UnlabeledPool,
        covariates: Literal["xz", "xzv"],
        seed: int,
    ) -> ClassifierRatio:
        """Logistic classifier of target versus source rows."""
        def design(pool: UnlabeledPool) -> np.ndarray:
            if covariates == "xzv":
                return np.column_stack([pool.features(), pool.v])
            return pool.features()

        features = np.vstack([design(source_pool), design(target_pool)])
        labels = np.concatenate([np.zeros(source_pool.n), np.ones(target_pool.n)])
        fit = self.classifier_service.fit_logistic(features, labels, seed=seed)
        return fit.model_copy(update={"covariates": covariates})

    def fit_from_pools(
        self,
        source_pool: UnlabeledPool,
        target_pool: UnlabeledPool,
        mode: RatioMode,
        seed: int,
        xz_factor: RatioModel | None = None,
    ) -> tuple[RatioModel, RatioModelFile | None]:
        """
        Estimate a ratio from unlabeled source and target pools.

        `classifier` classifies on (x, z, v) directly. `factorized` multiplies
        an (x, z) factor (the given one, else a classifier on (x, z)) by
        elastic-net V | X, Z ratios. The model file is None when the (x, z)
        factor was supplied and cannot be serialized.
        """
        self._check_pools(source_pool, target_pool)
        if mode == "classifier":
            fit = self.fit_classifier(source_pool, target_pool, "xzv", seed)
            return ClassifierDensityRatio(fit, clamp=self.clamp), RatioModelFile(
                mode="classifier", xz_factor=fit
            )
        if mode != "factorized":
            raise ConfigurationError(f"Unknown ratio mode {mode!r}")

        xz_fit = None
        if xz_factor is None:
            xz_fit = self.fit_classifier(source_pool, target_pool, "xz", seed)
            xz_factor = ClassifierDensityRatio(xz_fit, clamp=self.clamp)
        v_source = self.fit_v_models(source_pool, seed)
        v_target = self.fit_v_models(target_pool, seed)
        ratio = self.build_factorized_ratio(xz_factor, v_source, v_target)
        if xz_fit is None:
            return ratio, None
        return ratio, RatioModelFile(
            mode="factorized", xz_factor=xz_fit, v_source=v_source, v_target=v_target
        )

    def from_file(self, model_file: RatioModelFile) -> RatioModel:
        """Rebuild the in-memory ratio described by a model file."""
        if model_file.mode == "classifier":
            return ClassifierDensityRatio(model_file.xz_factor, clamp=self.clamp)
        if model_file.xz_factor is not None:
            xz_factor: RatioModel = ClassifierDensityRatio(model_file.xz_factor, clamp=self.clamp)
        else:
            xz_factor = ConstantRatio(1.0, clamp=self.clamp)
        return self.build_factorized_ratio(xz_factor, model_file.v_source, model_file.v_target)

    # ============== Samplers ==============

    def fit_sampler(
        self,
        pool: UnlabeledPool,
        kind: Literal["gaussian-linear", "logistic"],
        seed: int,
    ) -> SamplerModelFile:
        """Fit X | Z on a pool: elastic net (Gaussian) or IRLS logistic (binary X)."""
        if kind == "gaussian-linear":
            fit = self.elastic_net_service.fit_elastic_net(
                pool.z, pool.x, seed=derive_seed(seed, Stream.FOLDS, self._population_key(pool))
            )
            return SamplerModelFile(
                kind=kind,
                coefficients=list(fit.model.coefficients),
                intercept=fit.model.intercept,
                noise_sd=math.sqrt(fit.model.noise_variance),
            )
        if kind == "logistic":
            result = self.classifier_service.irls(pool.z, pool.x)
            return SamplerModelFile(
                kind=kind,
                coefficients=[float(c) for c in result.coefficients],
                intercept=result.intercept,
                noise_sd=0.0,
            )
        raise ConfigurationError(f"Unknown sampler kind {kind!r}")

    @staticmethod
    def sampler_from_file(model_file: SamplerModelFile) -> ConditionalSampler:
        if model_file.kind == "logistic":
            return LogisticSampler(model_file.coefficients, model_file.intercept)
        return GaussianLinearSampler(
            model_file.coefficients, model_file.intercept, model_file.noise_sd
        )

    # ============== Helpers ==============

    @staticmethod
    def _population_key(pool: UnlabeledPool) -> int:
        return 0 if pool.population == Population.SOURCE else 1

    @staticmethod
    def _check_pools(source_pool: UnlabeledPool, target_pool: UnlabeledPool) -> None:
        if source_pool.population != Population.SOURCE:
            raise PopulationMismatchError("source", source_pool.population.value)
        if target_pool.population != Population.TARGET:
            raise PopulationMismatchError("target", target_pool.population.value)
        if (
            source_pool.z.shape[1] != target_pool.z.shape[1]
            or source_pool.v.shape[1] != target_pool.v.shape[1]
        ):
            raise ConfigurationError("Source and target pools have different dimensions")
