import os

from dotenv import load_dotenv

load_dotenv()

# Monte Carlo defaults; config documents and CLI flags override these
DEFAULT_TRIALS = int(os.environ.get('SHIFTRISK_TRIALS', 5000))
DEFAULT_SEED = int(os.environ.get('SHIFTRISK_SEED', 20240101))
DEFAULT_WORKERS = int(os.environ.get('SHIFTRISK_WORKERS', os.cpu_count() or 1))

LOG_LEVEL = os.environ.get('SHIFTRISK_LOG_LEVEL', 'INFO').upper()

# absolute tolerance handed to scipy.integrate.quad
QUAD_TOL = float(os.environ.get('SHIFTRISK_QUAD_TOL', 1e-12))
