"""Closed-form channel capacity for noiseless state observations.

With perfect observations on both sides, adding an independent Gaussian
signal on top of the optimal feedback turns the loop into a memoryless
Gaussian MIMO channel y = B s + w. Capacity under the control budget is
a water-filling allocation across the eigendirections of B' psi_w^-1 B,
weighted by the per-direction control price.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPSD
from .linalg import check_psd, symmetrize
from .riccati import RiccatiSolution, solve_dare_control
from .systems import LqgSystem


@dataclass(frozen=True, eq=False)
class ChannelEigen:
    """Eigendecomposition of B' psi_w^-1 B, positive eigenvalues first."""

    u: np.ndarray
    lam: np.ndarray
    r: int
    rank_tol: float


@dataclass(frozen=True, eq=False)
class WaterFillingResult:
    """Optimal allocation under the weighted power budget.

    When some usable direction has zero control price the capacity is
    infinite: `infinite` is set, the unbounded entries of phi_hat_diag
    are numpy inf, and `phi` is None (no float infinities inside
    matrices). Finite allocations still satisfy the reduced budget
    equation.
    """

    alpha: float
    phi_hat_diag: np.ndarray
    phi: np.ndarray | None
    capacity: float
    gamma_hat_diag: np.ndarray
    infinite: bool
    infinite_indices: tuple


def channel_eigen(sys: LqgSystem, rank_rel_tol: float = 1e-10) -> ChannelEigen:
    """Diagonalize B' psi_w^-1 B with positive eigenvalues leading."""
    m = symmetrize(sys.b.T @ np.linalg.solve(sys.psi_w, sys.b))
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    rank_tol = rank_rel_tol * max(1.0, float(vals[0]) if vals.size else 0.0)
    r = int(np.sum(vals > rank_tol))
    return ChannelEigen(u=vecs, lam=vals, r=r, rank_tol=rank_tol)


def gamma_hat(sys: LqgSystem, riccati: RiccatiSolution, eig: ChannelEigen) -> np.ndarray:
    """Control price of the signal in the eigenbasis: U'(B' gamma B + G)U."""
    weight = sys.b.T @ riccati.gamma @ sys.b + sys.g
    ghat = symmetrize(eig.u.T @ weight @ eig.u)
    assert np.all(np.diag(ghat) >= -1e-10 * max(1.0, float(np.trace(ghat)))), \
        "control price matrix has a negative diagonal entry"
    return ghat


def _bisect_water_level(thresholds: np.ndarray, v: float) -> float:
    """Solve sum_i max(alpha - theta_i, 0) = v for the water level alpha."""
    if v <= 0.0:
        return float(np.min(thresholds))
    lo = float(np.min(thresholds))
    hi = float(np.max(thresholds)) + v
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        budget = float(np.sum(np.maximum(mid - thresholds, 0.0)))
        if budget > v:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-16 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def water_fill(eig: ChannelEigen, gamma_hat_mat: np.ndarray, v: float,
               diag_rel_tol: float = 1e-10) -> WaterFillingResult:
    """Water-filling allocation for budget v >= 0.

    Directions i < r with positive price get phi_i = max(alpha/price_i
    - 1/lam_i, 0) with alpha from the budget equation; a zero price
    inside the usable range makes the capacity infinite, and the finite
    directions are then filled with the reduced budget equation.
    """
    if v < 0.0:
        raise ValueError("budget must be nonnegative")
    d2 = eig.lam.shape[0]
    ghat_diag = np.diag(gamma_hat_mat).copy()
    diag_tol = diag_rel_tol * max(float(np.trace(gamma_hat_mat)) / max(d2, 1), 1e-300)
    usable = np.arange(eig.r)
    zero_price = [int(i) for i in usable if ghat_diag[i] <= diag_tol]
    priced = np.array([i for i in usable if ghat_diag[i] > diag_tol], dtype=int)

    phi = np.zeros(d2)
    if priced.size:
        thresholds = ghat_diag[priced] / eig.lam[priced]
        alpha = _bisect_water_level(thresholds, v)
        phi[priced] = np.maximum(alpha / ghat_diag[priced] - 1.0 / eig.lam[priced], 0.0)
    else:
        alpha = 0.0

    if zero_price:
        phi_hat = phi.copy()
        phi_hat[zero_price] = np.inf
        return WaterFillingResult(
            alpha=alpha, phi_hat_diag=phi_hat, phi=None, capacity=math.inf,
            gamma_hat_diag=ghat_diag, infinite=True,
            infinite_indices=tuple(zero_price))

    capacity = 0.5 * float(np.sum(np.log1p(phi[usable] * eig.lam[usable])))
    phi_mat = symmetrize(eig.u @ (phi[:, None] * eig.u.T))
    return WaterFillingResult(
        alpha=alpha, phi_hat_diag=phi, phi=phi_mat, capacity=capacity,
        gamma_hat_diag=ghat_diag, infinite=False, infinite_indices=())


def capacity_noiseless(sys: LqgSystem, riccati: RiccatiSolution | None, v: float,
                       ) -> WaterFillingResult:
    """Convenience wrapper: eigendecomposition + price + water-filling."""
    if riccati is None:
        riccati = solve_dare_control(sys)
    eig = channel_eigen(sys)
    return water_fill(eig, gamma_hat(sys, riccati, eig), v)


@dataclass(frozen=True)
class ScalarCapacity:
    capacity: float
    phi: float


def capacity_scalar(sys: LqgSystem, riccati: RiccatiSolution, v: float) -> ScalarCapacity:
    """Scalar closed form: half log(1 + v / (j_star + G psi_w / B^2)).

    Also returns the optimal signal variance v / (B^2 gamma + G). Only
    valid for 1x1 systems with a nonzero input map.
    """
    if not sys.is_scalar:
        raise DimensionMismatch("capacity_scalar needs a scalar system")
    b = float(sys.b[0, 0])
    if b == 0.0:
        raise DimensionMismatch("scalar system must have b != 0")
    g = float(sys.g[0, 0])
    psi_w = float(sys.psi_w[0, 0])
    gamma = float(riccati.gamma[0, 0])
    cap = 0.5 * math.log1p(v / (riccati.j_star + g * psi_w / b**2))
    phi = v / (b**2 * gamma + g)
    return ScalarCapacity(capacity=cap, phi=phi)


def cost_with_signal(sys: LqgSystem, riccati: RiccatiSolution, phi) -> float:
    """Long-run cost of the optimal feedback plus an N(0, phi) signal:
    j_star + trace((B' gamma B + G) phi)."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (sys.d2, sys.d2):
        raise NotPSD(f"phi must be {sys.d2}x{sys.d2}, got {phi.shape}")
    phi = check_psd(phi, "phi")
    weight = sys.b.T @ riccati.gamma @ sys.b + sys.g
    return riccati.j_star + float(np.trace(weight @ phi))
