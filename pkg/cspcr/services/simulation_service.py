"""
Simulation service - the two-population Gaussian design and the Monte Carlo driver.

Design, per population (source mean 0, target mean 1 for the relevant confounders):

    Z_r ~ N(mu_pop 1, I_p)            Z_null ~ N(0.1 1, I_q)
    X   ~ N(u'Z_r, 1)
    V   ~ N(v_pop'Z_r + (1 - theta) a_pop X + theta a_pop sin X, 1)
    Y   ~ N((v_outcome'Z_r)^2 + beta V + gamma X, 1)

Y | X, Z, V is the same in both populations, so only the covariate law shifts.
"""
import logging
import math
from collections import defaultdict

import numpy as np
from joblib import Parallel, delayed

from cspcr.core.config import Settings
from cspcr.core.exceptions import NumericalError
from cspcr.core.random import Stream, derive_seed, substream
from cspcr.models.enums import ControlVariateKind, Population, RatioMode, TestMethod
from cspcr.models.ratio import RatioModel, ShiftedMeanZRatio
from cspcr.models.sampler import GaussianLinearSampler
from cspcr.models.statistic import SurrogateRank, first_surrogate, y_times_x
from cspcr.schemas.config import TestConfig
from cspcr.schemas.dataset import SourceDataset, UnlabeledPool
from cspcr.schemas.simulation import DgpParams, ExperimentGrid, RejectionRateRow, TrialOutcome
from cspcr.services.engine_service import IndependenceTestEngine
from cspcr.services.ratio_service import RatioService

logger = logging.getLogger(__name__)

LABELED_STREAM, SOURCE_POOL_STREAM, TARGET_POOL_STREAM = 0, 1, 2


class SimulationService:
    """Service generating simulated data and running rejection-rate experiments."""

    def __init__(
        self,
        settings: Settings,
        ratio_service: RatioService,
        engine: IndependenceTestEngine,
    ):
        self.threads = settings.threads
        self.ratio_service = ratio_service
        self.engine = engine

    # ============== Data Generation ==============

    @staticmethod
    def gen_samples(
        params: DgpParams,
        population: Population,
        n: int,
        rng: np.random.Generator,
        labeled: bool = True,
    ) -> SourceDataset | UnlabeledPool:
        """Draw n rows from one population; labeled rows also carry Y."""
        if n < 1:
            raise ValueError("n must be at least 1")
        source = population == Population.SOURCE
        z_mean = params.z_mean_source if source else params.z_mean_target
        v_coef = np.asarray(params.v_s if source else params.v_t)
        a = params.a_s if source else params.a_t

        z_r = rng.normal(z_mean, 1.0, size=(n, params.p))
        z_null = rng.normal(params.z_null_mean, 1.0, size=(n, params.q))
        x = z_r @ np.asarray(params.u) + rng.standard_normal(n)
        theta = params.theta_nl
        v = (
            z_r @ v_coef
            + (1.0 - theta) * a * x
            + theta * a * np.sin(x)
            + rng.standard_normal(n)
        )
        z = np.hstack([z_r, z_null])
        if not labeled:
            return UnlabeledPool(population=population, x=x, z=z, v=v.reshape(-1, 1))
        y = (
            (z_r @ np.asarray(params.v_outcome)) ** 2
            + params.beta_indirect * v
            + params.gamma_direct * x
            + rng.standard_normal(n)
        )
        return SourceDataset(y=y, x=x, z=z, v=v.reshape(-1, 1))

    @staticmethod
    def dgp_sampler(params: DgpParams) -> GaussianLinearSampler:
        """X | Z ~ N(u'z_r, 1), shared by both populations."""
        return GaussianLinearSampler(params.u, intercept=0.0, noise_sd=1.0)

    @staticmethod
    def target_mean_v1(params: DgpParams) -> float:
        """Exact E_T[V_1], using E[sin X] = sin(mu) exp(-sigma^2 / 2) for Gaussian X."""
        u = np.asarray(params.u)
        mu_x = params.z_mean_target * float(u.sum())
        var_x = float(u @ u) + 1.0
        theta = params.theta_nl
        return (
            params.z_mean_target * float(np.sum(params.v_t))
            + (1.0 - theta) * params.a_t * mu_x
            + theta * params.a_t * math.sin(mu_x) * math.exp(-var_x / 2.0)
        )

    # ============== Trials ==============

    def run_trial(
        self,
        params: DgpParams,
        config: TestConfig,
        methods: tuple[TestMethod, ...],
        ratio_mode: RatioMode,
        seed: int,
        control_variate: ControlVariateKind = ControlVariateKind.SURROGATE_RANK,
    ) -> TrialOutcome:
        """
        One simulated dataset tested by every method with T = y * x.

        csPCR-pe takes E_T[a] from a simulated target pool, except for the
        v1 control variate under the analytic ratio, where it is exact.
        Numerical failures are recorded per method instead of raised.
        """
        labeled = self.gen_samples(
            params,
            Population.SOURCE,
            params.n_labeled,
            substream(seed, Stream.SIMULATION, LABELED_STREAM),
        )
        sampler = self.dgp_sampler(params)
        decisions: dict[TestMethod, bool | None] = {}
        errors: dict[TestMethod, str] = {}

        target_pool = None
        if ratio_mode == RatioMode.ESTIMATED or TestMethod.CSPCR_PE in methods:
            target_pool = self.gen_samples(
                params,
                Population.TARGET,
                params.n_pool,
                substream(seed, Stream.SIMULATION, TARGET_POOL_STREAM),
                labeled=False,
            )
        try:
            ratio = self._trial_ratio(params, ratio_mode, seed, target_pool)
        except NumericalError as exc:
            logger.warning("Ratio estimation failed: %s", exc.detail)
            return TrialOutcome(
                decisions=dict.fromkeys(methods),
                errors=dict.fromkeys(methods, exc.detail),
            )

        if control_variate == ControlVariateKind.FIRST_SURROGATE:
            variate = first_surrogate
            exact = ratio_mode == RatioMode.ANALYTIC
            a_target_mean = self.target_mean_v1(params) if exact else None
        else:
            variate, a_target_mean = SurrogateRank(), None

        clamped_rows = 0
        for method in methods:
            trial_config = config.model_copy(update={"method": method, "seed": seed})
            try:
                report = self.engine.run(
                    labeled,
                    trial_config,
                    sampler,
                    ratio=ratio,
                    statistic=y_times_x,
                    control_variate=variate,
                    target_pool=target_pool,
                    a_target_mean=a_target_mean,
                )
                decisions[method] = report.reject
                clamped_rows = max(clamped_rows, report.diagnostics.clamp_count)
            except NumericalError as exc:
                logger.warning("Trial error for %s: %s", method.value, exc.detail)
                decisions[method] = None
                errors[method] = exc.detail
        return TrialOutcome(decisions=decisions, errors=errors, clamped_rows=clamped_rows)

    def run_experiment(
        self,
        grid: ExperimentGrid,
        threads: int | None = None,
    ) -> list[RejectionRateRow]:
        """
        Rejection rate and Monte Carlo standard error per sweep value and method.

        Trial seeds depend only on (master seed, sweep index, rep index), so
        the table does not depend on `threads`.
        """
        n_jobs = threads or self.threads
        cells = [grid.cell(value) for value in grid.sweep.values]
        tasks = [
            (i, rep) for i in range(len(cells)) for rep in range(grid.reps)
        ]
        logger.info(
            "Running %d trials over %d sweep values (n_jobs=%d)", len(tasks), len(cells), n_jobs
        )
        outcomes = Parallel(n_jobs=n_jobs)(
            delayed(self.run_trial)(
                cells[i][0],
                cells[i][1],
                grid.methods,
                grid.ratio_mode,
                derive_seed(grid.config.seed, Stream.SIMULATION, i, rep),
                grid.control_variate,
            )
            for i, rep in tasks
        )

        grouped: dict[int, list[TrialOutcome]] = defaultdict(list)
        for (i, _), outcome in zip(tasks, outcomes, strict=True):
            grouped[i].append(outcome)

        rows = []
        for i, value in enumerate(grid.sweep.values):
            for method in grid.methods:
                decided = [o.decisions.get(method) for o in grouped[i]]
                completed = [d for d in decided if d is not None]
                reps = len(completed)
                rate = sum(completed) / reps if reps else float("nan")
                se = math.sqrt(rate * (1.0 - rate) / reps) if reps else float("nan")
                rows.append(
                    RejectionRateRow(
                        sweep_param=grid.sweep.param,
                        sweep_value=value,
                        method=method,
                        reps=reps,
                        reject_rate=rate,
                        mc_se=se,
                        errors_count=len(decided) - reps,
                    )
                )
            clamped = sum(1 for o in grouped[i] if o.clamped_rows)
            if clamped:
                logger.warning(
                    "Density ratio clamped in %d of %d trials at %s=%g",
                    clamped, len(grouped[i]), grid.sweep.param, value,
                )
            logger.info("Finished %s=%g", grid.sweep.param, value)
        return rows

    # ============== Helpers ==============

    def _trial_ratio(
        self,
        params: DgpParams,
        ratio_mode: RatioMode,
        seed: int,
        target_pool: UnlabeledPool | None,
    ) -> RatioModel:
        if ratio_mode == RatioMode.ANALYTIC:
            return self.ratio_service.analytic_dgp_ratio(params)

        source_pool = self.gen_samples(
            params,
            Population.SOURCE,
            params.n_pool,
            substream(seed, Stream.SIMULATION, SOURCE_POOL_STREAM),
            labeled=False,
        )
        z_factor = ShiftedMeanZRatio(
            params.p,
            params.z_mean_source,
            params.z_mean_target,
            clamp=self.ratio_service.clamp,
        )
        ratio, _ = self.ratio_service.fit_from_pools(
            source_pool, target_pool, "factorized", seed, xz_factor=z_factor
        )
        return ratio
