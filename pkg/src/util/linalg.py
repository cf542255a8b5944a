import logging
from typing import Optional

import numpy as np
import scipy.linalg

from src.util.errors import DomainError, ShapeError

logger = logging.getLogger(__name__)

PSD_RELATIVE_FLOOR = 1e-12


def symmetric_eigen(matrix: np.ndarray, name: str = "matrix") -> tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a symmetric PSD matrix with tiny negative eigenvalues
    clamped at zero.

    Raises:
        ShapeError: If the matrix is not square.
        DomainError: If it is not symmetric or has a negative eigenvalue beyond
            the relative floor.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * scale):
        raise DomainError(f"{name} is not symmetric")
    values, vectors = np.linalg.eigh((m + m.T) / 2.0)
    floor = -PSD_RELATIVE_FLOOR * max(1.0, float(np.max(np.abs(values)))) if values.size else 0.0
    if values.size and values.min() < floor:
        raise DomainError(f"{name} has negative eigenvalue {values.min():.3e}")
    if values.size and values.min() < 0.0:
        logger.debug(f"Clamping eigenvalue {values.min():.3e} of {name} to 0")
    return np.clip(values, 0.0, None), vectors


def psd_sqrt(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    values, vectors = symmetric_eigen(matrix, name)
    return (vectors * np.sqrt(values)) @ vectors.T


def psd_factor(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    """
    Returns a factor F with F F^T = matrix. Cholesky when the matrix is positive
    definite, otherwise the eigen square root with clamped eigenvalues.
    """
    m = np.asarray(matrix, dtype=float)
    try:
        return scipy.linalg.cholesky(m, lower=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
        return psd_sqrt(m, name)


def cholesky_lower(matrix: np.ndarray, name: str = "noise_cov") -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    try:
        return scipy.linalg.cholesky(m, lower=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise DomainError(f"{name} is not positive definite: {e}") from e


def rank_tolerance(design: np.ndarray, sigma_max: float) -> float:
    n, p = design.shape
    return max(n, p) * np.finfo(float).eps * sigma_max


def singular_values(design: np.ndarray) -> np.ndarray:
    return scipy.linalg.svd(np.asarray(design, dtype=float), compute_uv=False)


def smallest_singular_value(design: np.ndarray) -> float:
    """
    Smallest singular value of a tall design matrix.

    Raises:
        ShapeError: If the design has fewer rows than columns.
        DomainError: If the design is rank deficient.
    """
    x = np.asarray(design, dtype=float)
    if x.ndim != 2 or x.shape[0] < x.shape[1]:
        raise ShapeError(f"design must be n x p with n >= p, got shape {x.shape}")
    sv = singular_values(x)
    sigma_min = float(sv[-1])
    if sigma_min <= rank_tolerance(x, float(sv[0])):
        raise DomainError(f"design is rank deficient (smallest singular value {sigma_min:.3e})")
    return sigma_min


def least_squares_solve(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solves min ||X b - y|| through the economic QR factorization of X."""
    q, r = scipy.linalg.qr(design, mode="economic")
    return scipy.linalg.solve_triangular(r, q.T @ y)


def whiten(noise_chol: np.ndarray, array: np.ndarray) -> np.ndarray:
    return scipy.linalg.solve_triangular(noise_chol, array, lower=True)


def gls_solve(design: np.ndarray, noise_chol: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Generalized least squares through whitening with the Cholesky factor L of
    the noise covariance, then QR on (L^-1 X, L^-1 y).
    """
    return least_squares_solve(whiten(noise_chol, design), whiten(noise_chol, y))


def projection(design: np.ndarray, y: np.ndarray, noise_chol: Optional[np.ndarray] = None) -> np.ndarray:
    """
    P y with P = X (X^T S^-1 X)^-1 X^T S^-1 for S = L L^T, or the orthogonal
    projection onto the column space of X when no factor is given.
    """
    if noise_chol is None:
        q, _ = scipy.linalg.qr(design, mode="economic")
        return q @ (q.T @ y)
    return design @ gls_solve(design, noise_chol, y)


def information_matrix(design: np.ndarray, noise_chol: np.ndarray) -> np.ndarray:
    """X^T S^-1 X."""
    xw = whiten(noise_chol, design)
    return xw.T @ xw


def trace_cov_projection(
    design: np.ndarray, noise_cov: np.ndarray, weighted: bool = True
) -> float:
    """
    Tr[S P] for the weighted projection P_{X,S} (weighted=True) or the
    orthogonal projection P_X.
    """
    x = np.asarray(design, dtype=float)
    s = np.asarray(noise_cov, dtype=float)
    if weighted:
        info = information_matrix(x, cholesky_lower(s))
        factor = scipy.linalg.cho_factor(info, lower=True)
        return float(np.trace(scipy.linalg.cho_solve(factor, x.T @ x)))
    q, _ = scipy.linalg.qr(x, mode="economic")
    return float(np.trace(q.T @ s @ q))


def ols_error_trace(design: np.ndarray, noise_cov: np.ndarray) -> float:
    """Tr[S X (X^T X)^-2 X^T], the summed variance of least squares under noise S."""
    x = np.asarray(design, dtype=float)
    q, r = scipy.linalg.qr(x, mode="economic")
    a = scipy.linalg.solve_triangular(r, q.T)
    return float(np.trace(a @ np.asarray(noise_cov, dtype=float) @ a.T))


def inverse_trace(matrix: np.ndarray) -> float:
    """Tr[A^-1] of a symmetric positive definite A."""
    factor = scipy.linalg.cho_factor(np.asarray(matrix, dtype=float), lower=True)
    return float(np.trace(scipy.linalg.cho_solve(factor, np.eye(factor[0].shape[0]))))
