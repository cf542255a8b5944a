import numpy as np


def cell_seed(master_seed: int, estimator_index: int, perturbation_index: int) -> int:
    """
    Derives the seed of one risk-matrix cell from the master seed and the cell
    coordinates. The result depends only on its arguments, never on scheduling.

    Args:
        master_seed (int): Unsigned 64-bit experiment seed.
        estimator_index (int): Row index i.
        perturbation_index (int): Column index j.

    Returns:
        int: A 64-bit seed for the cell.
    """
    ss = np.random.SeedSequence([master_seed, estimator_index, perturbation_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_stream(seed: int, trial: int) -> np.random.Generator:
    """
    Counter-based stream for trial `trial` of the cell seeded by `seed`.

    Philox is keyed by the spawned seed sequence, so streams for distinct
    (seed, trial) pairs are independent and can be built in any order.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(trial,))
    return np.random.Generator(np.random.Philox(ss))


def stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
