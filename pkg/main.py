import argparse
import logging
import logging.config
import sys
from typing import List, Optional

import src.controllers.bounds
import src.controllers.risk_matrix
import src.controllers.sweep
import src.controllers.verify
from src.config.config import APP_NAME, VERSION, logging_config
from src.middleware.command_logging import CommandLoggingMiddleware

logging.config.dictConfig(logging_config)

ROUTERS = [
    src.controllers.risk_matrix.router,
    src.controllers.sweep.router,
    src.controllers.verify.router,
    src.controllers.bounds.router,
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML experiment manifest")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per cell")
    common.add_argument("--threads", type=int, help="worker processes")
    common.add_argument("--format", choices=["csv", "json"], help="report format")
    common.add_argument("--out", help="report path; stdout when omitted")

    parser = argparse.ArgumentParser(
        prog="shiftrisk",
        description="Minimax risk under Wasserstein distribution shift: simulations and theory tables.",
    )
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for router in ROUTERS:
        router.include(subparsers, parents=[common])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    middleware = CommandLoggingMiddleware(logger=logging.getLogger(__name__))
    return middleware.dispatch(args.router, args)


if __name__ == "__main__":
    sys.exit(main())
