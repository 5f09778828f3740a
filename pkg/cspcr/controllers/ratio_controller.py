"""
Ratio controller - `cspcr ratio-fit` and `cspcr sampler-fit`.
"""
import argparse

from cspcr.core.config import get_settings
from cspcr.core.dependencies import get_file_service, get_ratio_service
from cspcr.models.enums import Population


def register(subparsers) -> None:
    """Add the `ratio-fit` and `sampler-fit` sub-commands."""
    settings = get_settings()

    ratio_parser = subparsers.add_parser(
        "ratio-fit", help="Estimate a density ratio from source and target pools"
    )
    ratio_parser.add_argument("--source", required=True, help="Unlabeled source CSV")
    ratio_parser.add_argument("--target", required=True, help="Unlabeled target CSV")
    ratio_parser.add_argument("--mode", choices=["classifier", "factorized"], default="factorized")
    ratio_parser.add_argument("--seed", type=int, default=settings.default_seed)
    ratio_parser.add_argument("--out", required=True, help="Ratio model JSON path")
    ratio_parser.set_defaults(handler=cmd_ratio_fit)

    sampler_parser = subparsers.add_parser(
        "sampler-fit", help="Fit the X | Z sampler on an unlabeled pool"
    )
    sampler_parser.add_argument("--pool", required=True, help="Unlabeled (target) CSV")
    sampler_parser.add_argument(
        "--kind", choices=["gaussian-linear", "logistic"], default="gaussian-linear"
    )
    sampler_parser.add_argument("--seed", type=int, default=settings.default_seed)
    sampler_parser.add_argument("--out", required=True, help="Sampler model JSON path")
    sampler_parser.set_defaults(handler=cmd_sampler_fit)


def cmd_ratio_fit(args: argparse.Namespace) -> int:
    file_service = get_file_service()
    source = file_service.read_pool(args.source, Population.SOURCE)
    target = file_service.read_pool(args.target, Population.TARGET)
    _, model_file = get_ratio_service().fit_from_pools(source, target, args.mode, args.seed)
    file_service.write_model(model_file, args.out)
    return 0


def cmd_sampler_fit(args: argparse.Namespace) -> int:
    file_service = get_file_service()
    pool = file_service.read_pool(args.pool, Population.TARGET)
    model_file = get_ratio_service().fit_sampler(pool, args.kind, args.seed)
    file_service.write_model(model_file, args.out)
    return 0
