import argparse

from src.services import experiments as experiments_service
from src.util.cli import CommandRouter
from src.util.config_dependency import get_config
from src.util.errors import CheckFailure
from src.util.reports import write_report

router = CommandRouter(
    "verify",
    help="Check empirical risks against theory at 3 SE and run the identity suite",
)

CHECK_COLUMNS = ["name", "passed", "detail"]


@router.command
def verify(args: argparse.Namespace) -> int:
    """
    Writes one row per check, then fails with the names of the failing checks.

    Raises:
        CheckFailure: If any check failed (exit code 1).
    """
    config = get_config(args)
    results = experiments_service.verify(config)
    write_report(results, CHECK_COLUMNS, config.output_format, config.output_path)
    failed = [result.name for result in results if not result.passed]
    if failed:
        raise CheckFailure(failed)
    return 0
