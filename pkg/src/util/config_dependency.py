import argparse

from src.schemas.experiments import ExperimentConfig
from src.services.experiments import apply_overrides, load_config


def get_config(args: argparse.Namespace) -> ExperimentConfig:
    """The manifest named by --config with the command-line flags applied on top."""
    config = load_config(args.config)
    return apply_overrides(
        config,
        master_seed=args.seed,
        trials=args.trials,
        threads=args.threads,
        output_format=args.format,
        output_path=args.out,
    )
