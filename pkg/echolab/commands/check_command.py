"""
Check Command
echo-lab check [--samples N] [--seed S]: the symplectic-core invariant suites
"""
import argparse
import logging

from echolab.commands.arguments import positive_int
from echolab.config import settings
from echolab.property_suite import run_all

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("check", help="Run the symplectic-core property suites")
    parser.add_argument("--samples", type=positive_int, default=settings.PROPERTY_SAMPLES)
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.set_defaults(func=handle)


def handle(args: argparse.Namespace) -> int:
    """Exit 0 iff every suite stays within tolerance"""
    results = run_all(samples=args.samples, seed=args.seed)
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error(f"❌ Property checks out of tolerance: {', '.join(failed)}")
        return 3
    logger.info(f"✓ All {len(results)} property suites passed")
    return 0
