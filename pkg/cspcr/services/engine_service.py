"""
Independence test engine - csPCR, power-enhanced csPCR, PCR and importance resampling.
"""
import logging

import numpy as np

from cspcr.core.config import Settings
from cspcr.core.exceptions import (
    ConfigurationError,
    DegenerateWeightsError,
    NonFiniteError,
)
from cspcr.core.random import Stream, substream
from cspcr.models.enums import TestMethod
from cspcr.models.ratio import RatioModel
from cspcr.models.sampler import ConditionalSampler
from cspcr.models.statistic import ControlVariateFn, StatisticFn, SurrogateRank, y_times_x
from cspcr.schemas.config import TestConfig
from cspcr.schemas.dataset import SourceDataset, UnlabeledPool
from cspcr.schemas.gchisq import CovMatrix
from cspcr.schemas.labels import LabelAssignment
from cspcr.schemas.report import LabelSummary, TestReport, WeightDiagnostics
from cspcr.services.dataset_service import DatasetService
from cspcr.services.gchisq_service import GChiSqService
from cspcr.services.randomization_service import RandomizationService
from cspcr.services.weighting_service import WeightingService

logger = logging.getLogger(__name__)

LABEL_STREAMS = (Stream.LABELING, Stream.TIE_BREAKS)
POOL_STREAMS = (Stream.POOL_LABELING, Stream.POOL_TIE_BREAKS)


class IndependenceTestEngine:
    """Runs one conditional independence test and emits a TestReport."""

    def __init__(
        self,
        settings: Settings,
        dataset_service: DatasetService,
        randomization_service: RandomizationService,
        weighting_service: WeightingService,
        gchisq_service: GChiSqService,
    ):
        self.is_resample_fraction = settings.is_resample_fraction
        self.dataset_service = dataset_service
        self.randomization_service = randomization_service
        self.weighting_service = weighting_service
        self.gchisq_service = gchisq_service

    def run(
        self,
        dataset: SourceDataset,
        config: TestConfig,
        sampler: ConditionalSampler,
        ratio: RatioModel | None = None,
        statistic: StatisticFn = y_times_x,
        control_variate: ControlVariateFn | SurrogateRank | None = None,
        target_pool: UnlabeledPool | None = None,
        a_target_mean=None,
    ) -> TestReport:
        """Dispatch on `config.method`."""
        if config.method == TestMethod.PCR:
            return self.run_pcr(dataset, sampler, statistic, config)
        if ratio is None:
            raise ConfigurationError(f"Method {config.method.value} needs a density ratio")
        if config.method == TestMethod.CSPCR:
            return self.run_cspcr(dataset, ratio, sampler, statistic, config)
        if config.method == TestMethod.CSPCR_PE:
            return self.run_cspcr_pe(
                dataset,
                ratio,
                sampler,
                statistic,
                control_variate or SurrogateRank(),
                target_pool,
                config,
                a_target_mean=a_target_mean,
            )
        return self.run_is(dataset, ratio, sampler, statistic, config)

    # ============== Methods ==============

    def run_cspcr(
        self,
        dataset: SourceDataset,
        ratio: RatioModel,
        sampler: ConditionalSampler,
        statistic: StatisticFn,
        config: TestConfig,
    ) -> TestReport:
        """
        Importance-weighted PCR test with the generalized chi-squared threshold.

        Weights rescaled to mean 1 (the default) pair with the sum-zero
        covariance P Omega-hat P; raw weights use Omega-hat.
        """
        self.dataset_service.validate_dataset(dataset)
        weights, clamp_count = self._weights(dataset, ratio, config)
        assignment = self._labels(dataset, sampler, statistic, config)
        w_sums, d_sums = self.weighting_service.weighted_label_sums(
            assignment.labels, weights, config.l
        )
        if config.normalize_weights:
            omega = self.weighting_service.self_normalized_omega(d_sums, dataset.n, config.l)
        else:
            omega = self.weighting_service.omega_hat(d_sums, dataset.n, config.l)
        summary = LabelSummary(W=tuple(w_sums), D=tuple(d_sums))
        statistic_u = self.weighting_service.u_statistic(w_sums, dataset.n, config.l)
        return self._report(
            TestMethod.CSPCR,
            dataset.n,
            config,
            statistic_u,
            omega,
            assignment,
            summary,
            self.weighting_service.diagnostics(weights, clamp_count),
        )

    def run_cspcr_pe(
        self,
        dataset: SourceDataset,
        ratio: RatioModel,
        sampler: ConditionalSampler,
        statistic: StatisticFn,
        control_variate: ControlVariateFn | SurrogateRank,
        target_pool: UnlabeledPool | None,
        config: TestConfig,
        a_target_mean=None,
    ) -> TestReport:
        """
        csPCR with control-variate augmentation of the label sums.

        A `SurrogateRank` control variate gives label l its own indicator a_l;
        any other control variate is one column shared by every label.
        E_T[a] is `a_target_mean` when given, else the target-pool mean of a,
        and then the pool's sampling variance is added to Omega-tilde.
        """
        if a_target_mean is None and target_pool is None:
            raise ConfigurationError(
                "cspcr-pe needs a target pool or a known target mean of the control variate"
            )
        self.dataset_service.validate_dataset(dataset)
        n, l = dataset.n, config.l  # noqa: E741
        if isinstance(control_variate, SurrogateRank):
            if a_target_mean is not None and np.size(a_target_mean) != l:
                raise ConfigurationError(
                    f"The surrogate-rank control variate needs {l} target means or a target pool"
                )
            data_variate = self._surrogate_indicators(
                control_variate, sampler, statistic, config, LABEL_STREAMS
            )
            pool_variate = self._surrogate_indicators(
                control_variate, sampler, statistic, config, POOL_STREAMS
            )
        else:
            data_variate = pool_variate = control_variate

        pool_values = None
        if a_target_mean is None:
            self.dataset_service.validate_pool(target_pool, dataset)
            try:
                pool_values = self.weighting_service.control_values(target_pool, pool_variate)
            except (ValueError, IndexError) as exc:
                raise ConfigurationError(
                    f"Control variate failed on the target pool: {exc}"
                ) from exc
            a_target_mean = pool_values.mean(axis=0)

        weights, clamp_count = self._weights(dataset, ratio, config)
        try:
            a_values = np.asarray(data_variate(dataset.x, dataset.z, dataset.v), dtype=float)
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(f"Control variate failed on the data: {exc}") from exc
        bad = np.flatnonzero(~np.all(np.isfinite(a_values.reshape(n, -1)), axis=1))
        if bad.size:
            raise NonFiniteError(int(bad[0]), "control variate")
        assignment = self._labels(dataset, sampler, statistic, config)
        w_sums, d_sums = self.weighting_service.weighted_label_sums(assignment.labels, weights, l)
        gamma = np.array(
            [
                self.weighting_service.fit_gamma(
                    assignment.labels, weights, a_values, ell, config.gamma_estimator
                )
                for ell in range(1, l + 1)
            ]
        )
        w_tilde, contribution = self.weighting_service.enhanced_sums(
            assignment.labels, weights, a_values, gamma, a_target_mean, n, l
        )
        spread = contribution
        if config.normalize_weights:
            spread = self.weighting_service.self_normalized_contributions(
                contribution, weights, gamma, a_target_mean, l
            )
        omega = self.weighting_service.omega_tilde(spread, n, l)
        if pool_values is not None:
            extra = self.weighting_service.target_mean_covariance(gamma, pool_values, n, l)
            omega = CovMatrix(entries=omega.entries + extra)
        summary = LabelSummary(
            W=tuple(w_sums),
            D=tuple(d_sums),
            W_tilde=tuple(float(w) for w in w_tilde),
            gamma_hat=tuple(float(g) for g in gamma),
            contribution_matrix=tuple(tuple(float(c) for c in row) for row in contribution),
            a_target_mean=tuple(
                float(m) for m in np.broadcast_to(np.ravel(a_target_mean), (l,))
            ),
        )
        return self._report(
            TestMethod.CSPCR_PE,
            n,
            config,
            self.weighting_service.u_statistic(w_tilde, n, l),
            omega,
            assignment,
            summary,
            self.weighting_service.diagnostics(weights, clamp_count),
        )

    def run_pcr(
        self,
        dataset: SourceDataset,
        sampler: ConditionalSampler,
        statistic: StatisticFn,
        config: TestConfig,
        row_keys=None,
        diagnostics: WeightDiagnostics | None = None,
        method: TestMethod = TestMethod.PCR,
    ) -> TestReport:
        """Unweighted PCR test; null covariance I - J / L."""
        self.dataset_service.validate_dataset(dataset)
        assignment = self._labels(dataset, sampler, statistic, config, row_keys)
        ones = np.ones(dataset.n)
        w_sums, d_sums = self.weighting_service.weighted_label_sums(
            assignment.labels, ones, config.l
        )
        return self._report(
            method,
            dataset.n,
            config,
            self.weighting_service.u_statistic(w_sums, dataset.n, config.l),
            self.weighting_service.null_projection(config.l),
            assignment,
            LabelSummary(W=tuple(w_sums), D=tuple(d_sums)),
            diagnostics or self.weighting_service.diagnostics(ones),
        )

    def run_is(
        self,
        dataset: SourceDataset,
        ratio: RatioModel,
        sampler: ConditionalSampler,
        statistic: StatisticFn,
        config: TestConfig,
    ) -> TestReport:
        """
        Importance-resampling comparator.

        Draws m rows without replacement with probabilities proportional to
        the weights, then runs PCR on them. Each kept row reuses its own
        randomness stream, so uniform weights with m = n reproduce PCR.
        """
        self.dataset_service.validate_dataset(dataset)
        weights, clamp_count = self._weights(dataset, ratio, config)
        m = config.m_resample or max(1, int(dataset.n * self.is_resample_fraction))
        if m > dataset.n:
            raise ConfigurationError(
                f"m_resample={m} exceeds the number of rows n={dataset.n}"
            )
        total = weights.sum()
        if total <= 0:
            raise DegenerateWeightsError()
        if np.count_nonzero(weights) < m:
            raise DegenerateWeightsError(
                f"Only {np.count_nonzero(weights)} rows have positive weight; cannot resample {m}"
            )
        rng = substream(config.seed, Stream.RESAMPLING)
        chosen = np.sort(rng.choice(dataset.n, size=m, replace=False, p=weights / total))
        logger.debug("Importance resampling kept %d of %d rows", m, dataset.n)
        return self.run_pcr(
            dataset.take(chosen),
            sampler,
            statistic,
            config,
            row_keys=chosen,
            diagnostics=self.weighting_service.diagnostics(weights, clamp_count),
            method=TestMethod.IS,
        )

    # ============== Helpers ==============

    @staticmethod
    def _weights(
        dataset: SourceDataset,
        ratio: RatioModel,
        config: TestConfig,
    ) -> tuple[np.ndarray, int]:
        evaluation = ratio.evaluate(dataset.x, dataset.z, dataset.v)
        weights = np.asarray(evaluation.values, dtype=float)
        if evaluation.clamp_count:
            logger.debug("Density ratio clamped on %d row(s)", evaluation.clamp_count)
        if config.normalize_weights:
            mean = weights.mean()
            if mean <= 0:
                raise DegenerateWeightsError()
            weights = weights / mean
        return weights, evaluation.clamp_count

    def _labels(
        self,
        dataset: SourceDataset,
        sampler: ConditionalSampler,
        statistic: StatisticFn,
        config: TestConfig,
        row_keys=None,
    ) -> LabelAssignment:
        return self.randomization_service.assign_labels(
            dataset, sampler, statistic, config.k, config.l, config.seed, row_keys=row_keys
        )

    def _surrogate_indicators(
        self,
        control_variate: SurrogateRank,
        sampler: ConditionalSampler,
        statistic: StatisticFn,
        config: TestConfig,
        streams: tuple[Stream, Stream],
    ) -> ControlVariateFn:
        """Control variate returning the n x L indicators of the surrogate labels."""

        def indicators(x: np.ndarray, z: np.ndarray, v: np.ndarray) -> np.ndarray:
            rows = SourceDataset(y=control_variate.outcome(v), x=x, z=z, v=v)
            assignment = self.randomization_service.assign_labels(
                rows, sampler, statistic, config.k, config.l, config.seed, streams=streams
            )
            return self.weighting_service.label_indicators(assignment.labels, config.l)

        return indicators

    def _report(
        self,
        method: TestMethod,
        n: int,
        config: TestConfig,
        statistic_u: float,
        omega: CovMatrix,
        assignment: LabelAssignment,
        summary: LabelSummary,
        diagnostics: WeightDiagnostics,
    ) -> TestReport:
        spectral = self.gchisq_service.spectral_weights(omega)
        decision = self.gchisq_service.decide(spectral, statistic_u, config.alpha)
        logger.info(
            "%s: U=%.4f threshold=%.4f p=%.4g reject=%s",
            method.value, statistic_u, decision.threshold, decision.p_value, decision.reject,
        )
        return TestReport(
            method=method,
            n=n,
            k=config.k,
            l=config.l,
            alpha=config.alpha,
            seed=config.seed,
            statistic=statistic_u,
            threshold=decision.threshold,
            p_value=decision.p_value,
            reject=decision.reject,
            labels=assignment.labels,
            per_label=summary,
            spectral=spectral,
            diagnostics=diagnostics,
        )
