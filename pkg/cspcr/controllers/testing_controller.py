"""
Test controller - `cspcr test`.
"""
import argparse
import logging

from cspcr.core.config import get_settings
from cspcr.core.dependencies import (
    get_dataset_service,
    get_engine,
    get_file_service,
    get_ratio_service,
)
from cspcr.core.exceptions import ConfigurationError
from cspcr.models.enums import GammaEstimator, Population, TestMethod
from cspcr.models.ratio import PrecomputedRatio, RatioModel
from cspcr.models.statistic import (
    ControlVariateFn,
    CovariateColumn,
    SurrogateRank,
    first_surrogate,
)
from cspcr.schemas.config import TestConfig
from cspcr.schemas.dataset import SourceDataset, UnlabeledPool

logger = logging.getLogger(__name__)

RANDOMNESS_HELP = (
    "All randomness derives from --seed through named sub-streams: labeling "
    "(counterfeits, keyed by row), tie-breaks (keyed by row), resampling (is), "
    "split (--ratio-split) and folds (cross-validation)."
)


def register(subparsers) -> None:
    """Add the `test` sub-command."""
    settings = get_settings()
    parser = subparsers.add_parser(
        "test",
        help="Run a conditional independence test on a data file",
        epilog=RANDOMNESS_HELP,
    )
    parser.add_argument("--data", required=True, help="Labeled CSV: y, x, z_1.., v_1.. [, w]")
    parser.add_argument(
        "--method", choices=[m.value for m in TestMethod], default=TestMethod.CSPCR.value
    )
    parser.add_argument("--k", type=int, default=settings.default_k, help="Counterfeits per label block")
    parser.add_argument("--l", type=int, default=settings.default_l, help="Number of labels")
    parser.add_argument("--alpha", type=float, default=settings.default_alpha)
    parser.add_argument("--seed", type=int, default=settings.default_seed)
    parser.add_argument("--out", required=True, help="Report JSON path")

    ratio_source = parser.add_mutually_exclusive_group()
    ratio_source.add_argument("--weight-col", help="Use a data column as the importance weights")
    ratio_source.add_argument("--ratio-model", help="Ratio model JSON written by ratio-fit")
    ratio_source.add_argument(
        "--pools", nargs=2, metavar=("SRC", "TGT"), help="Fit a factorized ratio on two pools"
    )
    ratio_source.add_argument(
        "--ratio-split",
        type=float,
        metavar="FRACTION",
        help="Fit a factorized ratio on this share of the data (with --target-pool), test on the rest",
    )

    parser.add_argument(
        "--sampler-model", required=True, help="X | Z sampler JSON written by sampler-fit"
    )
    parser.add_argument(
        "--control-variate",
        nargs="+",
        default=["surrogate-rank"],
        metavar="SPEC",
        help="'surrogate-rank [v_i]' (default, per-label indicators of the surrogate's label), "
        "'v1' or 'custom-col NAME' with NAME like z_2 or v_1",
    )
    parser.add_argument("--target-pool", help="Unlabeled target CSV (cspcr-pe, --ratio-split)")
    parser.add_argument("--target-mean-a", type=float, help="Known target mean of the control variate")
    parser.add_argument("--m-resample", type=int, help="Rows kept by the is method (default n/5)")
    parser.add_argument(
        "--gamma-estimator",
        choices=[g.value for g in GammaEstimator],
        default=GammaEstimator.COVARIANCE.value,
    )
    parser.add_argument(
        "--normalize-weights",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Rescale weights to mean 1 (default); --no-normalize-weights keeps raw ratios",
    )
    parser.set_defaults(handler=cmd_test)


def cmd_test(args: argparse.Namespace) -> int:
    """Run one test and write its report."""
    config = TestConfig(
        k=args.k,
        l=args.l,
        alpha=args.alpha,
        method=TestMethod(args.method),
        seed=args.seed,
        m_resample=args.m_resample,
        gamma_estimator=GammaEstimator(args.gamma_estimator),
        normalize_weights=args.normalize_weights,
    )
    file_service = get_file_service()
    ratio_service = get_ratio_service()

    dataset, weights = file_service.read_dataset(args.data, weight_col=args.weight_col)
    sampler = ratio_service.sampler_from_file(file_service.read_sampler_model(args.sampler_model))
    target_pool = (
        file_service.read_pool(args.target_pool, Population.TARGET) if args.target_pool else None
    )
    dataset, ratio = _resolve_ratio(args, config, dataset, weights, target_pool)

    report = get_engine().run(
        dataset,
        config,
        sampler,
        ratio=ratio,
        control_variate=_control_variate(args.control_variate),
        target_pool=target_pool,
        a_target_mean=args.target_mean_a,
    )
    if report.diagnostics.clamp_count:
        logger.warning("Density ratio clamped on %d row(s)", report.diagnostics.clamp_count)
    file_service.write_report(report, args.out)
    print(
        f"{report.method.value}: U={report.statistic:.6g} threshold={report.threshold:.6g} "
        f"p={report.p_value:.6g} reject={str(report.reject).lower()}"
    )
    return 0


def _resolve_ratio(
    args: argparse.Namespace,
    config: TestConfig,
    dataset: SourceDataset,
    weights,
    target_pool: UnlabeledPool | None,
) -> tuple[SourceDataset, RatioModel | None]:
    """Density ratio from the chosen source; --ratio-split also shrinks the dataset."""
    ratio_service = get_ratio_service()
    file_service = get_file_service()
    if args.weight_col:
        return dataset, PrecomputedRatio(weights)
    if args.ratio_model:
        return dataset, ratio_service.from_file(file_service.read_ratio_model(args.ratio_model))
    if args.pools:
        source = file_service.read_pool(args.pools[0], Population.SOURCE)
        target = file_service.read_pool(args.pools[1], Population.TARGET)
        ratio, _ = ratio_service.fit_from_pools(source, target, "factorized", config.seed)
        return dataset, ratio
    if args.ratio_split is not None:
        if target_pool is None:
            raise ConfigurationError("--ratio-split needs --target-pool")
        part_a, part_b = get_dataset_service().split_dataset(dataset, args.ratio_split, config.seed)
        source = UnlabeledPool(population=Population.SOURCE, x=part_a.x, z=part_a.z, v=part_a.v)
        ratio, _ = ratio_service.fit_from_pools(source, target_pool, "factorized", config.seed)
        logger.info("Fitted ratio on %d rows, testing on %d", part_a.n, part_b.n)
        return part_b, ratio
    if config.method != TestMethod.PCR:
        raise ConfigurationError(
            f"Method {config.method.value} needs a density ratio: "
            "pass --weight-col, --ratio-model, --pools or --ratio-split"
        )
    return dataset, None


def _control_variate(spec: list[str]) -> ControlVariateFn | SurrogateRank:
    try:
        if spec[0] == "surrogate-rank" and len(spec) <= 2:
            return SurrogateRank(*spec[1:])
        if spec == ["v1"]:
            return first_surrogate
        if len(spec) == 2 and spec[0] == "custom-col":
            return CovariateColumn(spec[1])
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    raise ConfigurationError(
        "--control-variate takes 'surrogate-rank [v_i]', 'v1' or 'custom-col NAME'"
    )
