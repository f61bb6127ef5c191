"""Small dense linear-algebra helpers shared across the package.

Everything here operates on plain float64 numpy arrays at desk scale
(dimensions of a few); clarity and verifiability beat asymptotics.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPSD

SYM_TOL = 1e-12


def as_matrix(value, name: str, shape=None) -> np.ndarray:
    """Coerce to a float64 2-D array, checking the expected shape."""
    mat = np.asarray(value, dtype=float)
    if mat.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got ndim={mat.ndim}")
    if shape is not None and mat.shape != shape:
        raise DimensionMismatch(f"{name} must have shape {shape}, got {mat.shape}")
    return mat


def symmetrize_checked(mat: np.ndarray, name: str, tol: float = SYM_TOL) -> np.ndarray:
    """Return (M + M')/2 if M is symmetric up to tol, else raise NotPSD."""
    asym = float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0
    scale = max(1.0, float(np.max(np.abs(mat))) if mat.size else 0.0)
    if asym > tol * scale:
        raise NotPSD(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    return 0.5 * (mat + mat.T)


def symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def min_eig(mat: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(mat)[0])


def check_psd(mat: np.ndarray, name: str, tol: float = 1e-10) -> np.ndarray:
    sym = symmetrize_checked(mat, name)
    scale = max(1.0, float(np.max(np.abs(sym))) if sym.size else 0.0)
    if min_eig(sym) < -tol * scale:
        raise NotPSD(f"{name} is not positive semidefinite "
                     f"(min eigenvalue {min_eig(sym):.3e})")
    return sym


def is_pd(mat: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(mat)
        return True
    except np.linalg.LinAlgError:
        return False


def spectral_radius(mat: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


def qr_rank(mat: np.ndarray, rel_tol: float = 1e-10) -> int:
    """Numerical rank via column-pivoted QR.

    The threshold is rel_tol times the largest column norm, so a zero
    matrix has rank 0 and scaling the input does not change the answer.
    """
    if mat.size == 0:
        return 0
    col_norms = np.linalg.norm(mat, axis=0)
    largest = float(np.max(col_norms))
    if largest == 0.0:
        return 0
    r = scipy.linalg.qr(mat, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    return int(np.sum(diag > rel_tol * largest))


def controllability_rank(a: np.ndarray, b: np.ndarray) -> int:
    d1 = a.shape[0]
    blocks = [b]
    for _ in range(d1 - 1):
        blocks.append(a @ blocks[-1])
    return qr_rank(np.hstack(blocks))


def observability_rank(a: np.ndarray, c: np.ndarray) -> int:
    return controllability_rank(a.T, c.T)


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """A factor L with L L' = cov, valid for singular PSD input.

    Cholesky when PD; otherwise an eigendecomposition square root with
    negative round-off eigenvalues clipped to zero.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(symmetrize(cov))
        vals = np.clip(vals, 0.0, None)
        return vecs * np.sqrt(vals)


def logdet_psd(mat: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(mat)
    if sign <= 0:
        raise NotPSD("log-det argument is not positive definite")
    return float(logdet)
