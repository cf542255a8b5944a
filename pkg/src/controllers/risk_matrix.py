import argparse

from src.services import experiments as experiments_service
from src.util.cli import CommandRouter
from src.util.config_dependency import get_config
from src.util.reports import write_report

router = CommandRouter(
    "risk-matrix",
    help="Monte Carlo risk of every estimator under every perturbation at one eps",
)

RISK_MATRIX_COLUMNS = ["estimator", "perturbation", "mean", "std_error", "trials", "seed"]


@router.command
def risk_matrix(args: argparse.Namespace) -> int:
    """
    Writes the estimator x perturbation table of the configured problem.

    Args:
        args (argparse.Namespace): Parsed flags; --config names a manifest with
            a single eps (one alpha or a one-element eps_list).

    Returns:
        int: 0 on success.
    """
    config = get_config(args)
    rows = experiments_service.risk_matrix_rows(config)
    write_report(rows, RISK_MATRIX_COLUMNS, config.output_format, config.output_path)
    return 0
