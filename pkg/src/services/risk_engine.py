import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.schemas.distributions import DistributionBase, LinearModel
from src.schemas.estimators import EstimatorBase
from src.schemas.experiments import ExperimentConfig, SweepRow
from src.schemas.perturbations import SHIFT_CLASS_RANK, PerturbationBase
from src.schemas.risk import LossBase, MinimaxSummary, PointwiseSquared, PredictionError, RiskMatrix, SquaredError
from src.services import distributions, perturbations, theory_bounds
from src.services.estimators import estimate, estimator_catalog
from src.util.errors import CellError, DomainError, NumericalError, ShapeError, UnsupportedOperationError
from src.util.rng import cell_seed as derive_cell_seed
from src.util.rng import trial_stream

logger = logging.getLogger(__name__)


class CellPlan(NamedTuple):
    """
    Everything a risk matrix needs. `laws[j]` is the clean law sampled for
    column j; density experiments replace the law itself instead of applying
    a perturbation to it.
    """

    laws: List[DistributionBase]
    perturbations: List[PerturbationBase]
    estimators: List[EstimatorBase]
    loss: LossBase
    n: int


def evaluate_loss(loss: LossBase, estimate_value: np.ndarray, target: np.ndarray, dist: DistributionBase) -> float:
    """
    Loss of one estimate.

    Args:
        loss (LossBase): SquaredError, PredictionError or PointwiseSquared.
        estimate_value (np.ndarray): The estimate.
        target (np.ndarray): The true parameter (or clean f(x0)).
        dist (DistributionBase): The clean law, which supplies the design for
            the prediction loss.

    Returns:
        float: The loss value.

    Raises:
        ShapeError: If the estimate and the target disagree.
    """
    diff = np.asarray(estimate_value, dtype=float).ravel() - np.asarray(target, dtype=float).ravel()
    if isinstance(loss, (SquaredError, PointwiseSquared)):
        return float(diff @ diff)
    if isinstance(loss, PredictionError):
        if loss.design is not None:
            design = np.asarray(loss.design, dtype=float)
        elif isinstance(dist, LinearModel):
            design = dist.x
        else:
            raise ShapeError("prediction loss needs a design")
        if design.shape[1] != diff.shape[0]:
            raise ShapeError(f"design has {design.shape[1]} columns, estimate has {diff.shape[0]} entries")
        fitted = design @ diff
        return float(fitted @ fitted) / design.shape[0]
    raise UnsupportedOperationError(f"unknown loss {loss.kind}")


def loss_target(loss: LossBase, dist: DistributionBase) -> np.ndarray:
    """The value the loss compares against; PointwiseSquared uses the clean f(x0)."""
    if isinstance(loss, PointwiseSquared):
        if loss.true_value is not None:
            return np.array([loss.true_value])
        return np.array([float(distributions.pdf(dist, loss.x0))])
    return np.asarray(distributions.location_parameter(dist), dtype=float)


def run_cell(
    dist: DistributionBase,
    perturbation: PerturbationBase,
    estimator: EstimatorBase,
    loss: LossBase,
    trials: int,
    cell_seed: int,
    n: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Monte Carlo risk of one (estimator, perturbation) pair.

    Trial t draws its clean sample and the perturbation's randomness from the
    stream (cell_seed, t), so the result does not depend on scheduling.

    Args:
        dist (DistributionBase): The law the clean sample is drawn from.
        perturbation (PerturbationBase): The shift applied to each sample.
        estimator (EstimatorBase): The estimator.
        loss (LossBase): The loss.
        trials (int): Number of trials, at least 2.
        cell_seed (int): Seed of the cell.
        n (int, optional): Sample size; the design rows for LinearModel.

    Returns:
        Tuple[float, float]: Mean loss and its standard error.

    Raises:
        DomainError: If trials < 2 or n is missing.
        NumericalError: If a loss is NaN or infinite.
    """
    if trials < 2:
        raise DomainError(f"trials must be >= 2, got {trials}")
    if isinstance(dist, LinearModel):
        n = dist.n
    if n is None:
        raise DomainError(f"sample size required for {dist.kind}")
    theta = distributions.location_parameter(dist)
    target = loss_target(loss, dist)
    losses = np.empty(trials)
    for t in range(trials):
        rng = trial_stream(cell_seed, t)
        clean = distributions.sample(dist, n, rng)
        shifted = perturbations.apply(perturbation, clean, theta, rng)
        value = evaluate_loss(loss, estimate(estimator, shifted), target, dist)
        if not math.isfinite(value):
            raise NumericalError(f"non-finite loss {value} in trial {t}")
        losses[t] = value
    mean = float(losses.mean())
    se = float(losses.std(ddof=1) / math.sqrt(trials))
    return mean, se


def _run_cell_job(args) -> Tuple[float, float]:
    return run_cell(*args)


def run_matrix(
    dist: DistributionBase,
    perturbations_list: Sequence[PerturbationBase],
    estimators: Sequence[EstimatorBase],
    loss: LossBase,
    trials: int,
    master_seed: int,
    n: Optional[int] = None,
    workers: int = 1,
    laws: Optional[Sequence[DistributionBase]] = None,
) -> RiskMatrix:
    """
    Runs every (estimator, perturbation) cell and collects the risk matrix.

    Cell (i, j) is seeded by cell_seed(master_seed, i, j); with workers > 1
    the cells run on a process pool and are reduced in index order, so the
    matrix is identical for every pool size.

    Args:
        dist (DistributionBase): Clean law.
        perturbations_list (Sequence[PerturbationBase]): Matrix columns.
        estimators (Sequence[EstimatorBase]): Matrix rows.
        loss (LossBase): The loss.
        trials (int): Trials per cell.
        master_seed (int): Unsigned 64-bit experiment seed.
        n (int, optional): Sample size.
        workers (int): Process count; 1 runs in-process.
        laws (Sequence[DistributionBase], optional): Per-column law replacing `dist`.

    Returns:
        RiskMatrix: Means and standard errors.

    Raises:
        DomainError: If a list is empty.
        CellError: For the first failing cell in index order.
    """
    if not perturbations_list or not estimators:
        raise DomainError("risk matrix needs at least one estimator and one perturbation")
    column_laws = list(laws) if laws is not None else [dist] * len(perturbations_list)
    if len(column_laws) != len(perturbations_list):
        raise ShapeError(f"{len(column_laws)} laws for {len(perturbations_list)} perturbations")
    cells = [(i, j) for i in range(len(estimators)) for j in range(len(perturbations_list))]
    jobs = [
        (column_laws[j], perturbations_list[j], estimators[i], loss, trials, derive_cell_seed(master_seed, i, j), n)
        for i, j in cells
    ]
    logger.debug(f"Running {len(cells)} cells x {trials} trials on {workers} worker(s)")

    results: List[Tuple[float, float]] = []
    if workers <= 1:
        for (i, j), job in zip(cells, jobs):
            try:
                results.append(_run_cell_job(job))
            except Exception as e:
                raise CellError(i, j, e) from e
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_run_cell_job, job) for job in jobs]
            for (i, j), future in zip(cells, futures):
                try:
                    results.append(future.result())
                except Exception as e:
                    for pending in futures:
                        pending.cancel()
                    raise CellError(i, j, e) from e

    cols = len(perturbations_list)
    mean_loss = [[results[i * cols + j][0] for j in range(cols)] for i in range(len(estimators))]
    std_error = [[results[i * cols + j][1] for j in range(cols)] for i in range(len(estimators))]
    return RiskMatrix(
        estimator_labels=[e.label for e in estimators],
        perturbation_labels=[p.label for p in perturbations_list],
        mean_loss=mean_loss,
        std_error=std_error,
        trials=trials,
        master_seed=master_seed,
    )


def minimax(matrix: RiskMatrix) -> MinimaxSummary:
    """
    min over estimators of the max over perturbations; ties go to the lowest index.
    """
    means = np.asarray(matrix.mean_loss, dtype=float)
    if means.size == 0:
        raise DomainError("empty risk matrix")
    worst = means.max(axis=1)
    row = int(np.argmin(worst))
    col = int(np.argmax(means[row]))
    return MinimaxSummary(
        value=float(worst[row]),
        argmin_estimator=row,
        argmax_perturbation=col,
        per_estimator_worst_case=worst.tolist(),
        std_error=float(matrix.std_error[row][col]),
    )


def restrict_columns(matrix: RiskMatrix, columns: Sequence[int]) -> RiskMatrix:
    """Sub-matrix on the given perturbation columns."""
    if not columns:
        raise DomainError("no columns selected")
    return RiskMatrix(
        estimator_labels=matrix.estimator_labels,
        perturbation_labels=[matrix.perturbation_labels[j] for j in columns],
        mean_loss=[[row[j] for j in columns] for row in matrix.mean_loss],
        std_error=[[row[j] for j in columns] for row in matrix.std_error],
        trials=matrix.trials,
        master_seed=matrix.master_seed,
    )


def class_columns(plan_perturbations: Sequence[PerturbationBase], shift_class: str) -> List[int]:
    """
    Columns admissible for a shift class. The classes are nested, so a class
    also contains every weaker perturbation of the catalog.
    """
    rank = SHIFT_CLASS_RANK[shift_class]
    return [j for j, p in enumerate(plan_perturbations) if SHIFT_CLASS_RANK[p.shift_class] <= rank]


def experiment_plan(config: ExperimentConfig, eps: float) -> CellPlan:
    """
    Catalogs of a configured problem at one budget.

    Raises:
        DomainError: If the problem has no catalog for the configured law.
    """
    n = config.sample_size
    if config.problem == "density":
        from src.services.density_experiments import density_plan

        return density_plan(config, eps)
    shifts = perturbations.catalog(config.problem, eps, n, config.dist)
    estimators = estimator_catalog(config.problem, n, eps, config.dist)
    return CellPlan(
        laws=[config.dist] * len(shifts),
        perturbations=shifts,
        estimators=estimators,
        loss=config.loss,
        n=n,
    )


def run_plan(plan: CellPlan, trials: int, master_seed: int, workers: int = 1) -> RiskMatrix:
    return run_matrix(
        plan.laws[0],
        plan.perturbations,
        plan.estimators,
        plan.loss,
        trials,
        master_seed,
        n=plan.n,
        workers=workers,
        laws=plan.laws,
    )


def epsilon_sweep(
    config: ExperimentConfig,
    alphas: Sequence[float],
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> List[SweepRow]:
    """
    Empirical minimax risk along eps = n^alpha with the matching theory values.

    For each alpha the catalogs are built at eps, the matrix is run once and
    every configured shift class is read off the columns admissible for it.

    Args:
        config (ExperimentConfig): The experiment.
        alphas (Sequence[float]): Exponents; an empty list gives an empty report.
        trials (int): Trials per cell.
        master_seed (int): Experiment seed; every alpha reuses it.
        workers (int): Process count.

    Returns:
        List[SweepRow]: One row per (alpha, shift class).

    Raises:
        DomainError: If n < 2 or a shift class has no admissible column.
    """
    n = config.sample_size
    if n < 2:
        raise DomainError(f"sweep needs n >= 2 so that log n > 0, got {n}")
    rows: List[SweepRow] = []
    for alpha in alphas:
        eps = float(n) ** alpha
        rows.extend(_sweep_at(config, alpha, eps, trials, master_seed, workers))
    return rows


def _sweep_at(
    config: ExperimentConfig,
    alpha: Optional[float],
    eps: float,
    trials: int,
    master_seed: int,
    workers: int,
) -> List[SweepRow]:
    n = config.sample_size
    plan = experiment_plan(config, eps)
    matrix = run_plan(plan, trials, master_seed, workers)
    rows = []
    for shift_class in config.shift_classes:
        columns = class_columns(plan.perturbations, shift_class)
        if not columns:
            raise DomainError(f"{config.problem} catalog has no perturbation of class {shift_class} or weaker")
        summary = minimax(restrict_columns(matrix, columns))
        bound = theory_bounds.theory_for(config, shift_class, eps)
        log_n_risk = math.log(summary.value) / math.log(n) if summary.value > 0.0 else None
        rows.append(
            SweepRow(
                problem=config.problem,
                alpha=alpha,
                eps=eps,
                shift_class=shift_class,
                minimax_empirical=summary.value,
                se=summary.std_error,
                log_n_risk=log_n_risk,
                theory_exact=bound.exact if bound else None,
                theory_lower=bound.lower if bound else None,
                theory_upper=bound.upper if bound else None,
                rate_only=bound.rate_only if bound else False,
            )
        )
        logger.debug(f"alpha={alpha} eps={eps:.6g} {shift_class}: minimax {summary.value:.6g} (se {summary.std_error:.2g})")
    return rows

