"""
Command-line surface: manage.py <subcommand> --config PATH [flags]
"""
import argparse
import logging
from typing import List, Optional

from core.error_handling import ErrorHandler

from .models import SUBCOMMANDS, apply_overrides, load_config
from .services import ExperimentService

logger = logging.getLogger(__name__)

HELP = {
    'dim': 'certified enclosure of the Hausdorff dimension',
    'beta': 'temperature function and Legendre spectrum over the q grid',
    'kappa': 'q_r and kappa_r for every r',
    'measure': 'cylinder weights and the discretized measure',
    'quantize': 'optimal quantizers, error curves and D_r fits',
    'verify': 'every check from every module; exit 2 on any failure',
    'figure1': 'beta samples with the lines y = r q and their intersections',
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='manage.py',
        description='Cookie-cutter pressure, dimension and quantization experiments',
    )
    subparsers = parser.add_subparsers(dest='subcommand', required=True, metavar='subcommand')
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, help=HELP[name])
        sub.add_argument('--config', required=True, help='experiment JSON file')
        sub.add_argument('--out', dest='output_dir', help='output directory (overrides the config)')
        sub.add_argument('--depth', type=int, help='maximal word length k_max')
        sub.add_argument('--tol', type=float, help='root enclosure tolerance')
        sub.add_argument('--threads', type=int, help='worker threads for independent (q, r, n) items')
        sub.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR')
    return parser


def main(argv: Optional[List[str]] = None, service: Optional[ExperimentService] = None) -> int:
    """Parse, run and map the outcome to an exit code"""
    from quantdim.log import setup_logging

    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    context = {'subcommand': args.subcommand, 'config': args.config}
    try:
        config = apply_overrides(
            load_config(args.config),
            output_dir=args.output_dir,
            depth=args.depth,
            tol=args.tol,
            threads=args.threads,
        )
        outcome = (service or ExperimentService()).run_subcommand(args.subcommand, config)
    except Exception as exc:
        return ErrorHandler().handle(exc, context)

    for path in outcome.artifacts:
        logger.info(f"Wrote {path}")
    return outcome.exit_code
