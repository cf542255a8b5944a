import argparse

from src.services import experiments as experiments_service
from src.util.cli import CommandRouter
from src.util.config_dependency import get_config
from src.util.reports import write_report

router = CommandRouter("bounds", help="Theory-only table over the eps grid, no sampling")


@router.command
def bounds(args: argparse.Namespace) -> int:
    config = get_config(args)
    rows = experiments_service.bounds_table(config)
    write_report(rows, experiments_service.bounds_columns(config), config.output_format, config.output_path)
    return 0
