"""Riccati and Lyapunov machinery for the plant and the filters.

All fixed points are found by iterating the defining map and are
residual-verified at exit, so a returned solution is its own
certificate. Tolerances are infinity-norm on the iterate change.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SingularInnerMatrix, Unstable
from .linalg import spectral_radius, symmetrize
from .systems import LqgSystem, validate_system

DEFAULT_TOL = 1e-12
MAX_ITER = 10**6


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Stationary solution: value matrix gamma, gain, optimal cost j_star."""

    gamma: np.ndarray
    gain: np.ndarray
    j_star: float
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class FiniteHorizonSolution:
    """Backward recursion output: gammas[t-1] is the stage-t value matrix.

    gammas has n+1 entries (stages 1..n+1, the last one equal to the
    terminal weight f); gains has n entries (stages 1..n).
    """

    gammas: list
    gains: list
    j_star_n: float


def _control_step(a, b, f, g, gamma):
    """One application of the control Riccati map, plus the gain it implies."""
    m = g + b.T @ gamma @ b
    s = b.T @ gamma
    try:
        x = np.linalg.solve(m, s)
    except np.linalg.LinAlgError as exc:
        raise SingularInnerMatrix(f"g + b' gamma b is singular: {exc}") from exc
    nxt = symmetrize(f + a.T @ (gamma - s.T @ x) @ a)
    gain = x @ a
    return nxt, gain


def _solve_dare_scalar(sys: LqgSystem, tol: float, max_iter: int) -> RiccatiSolution:
    """1x1 fast path: the same fixed-point map in plain float arithmetic."""
    a = float(sys.a[0, 0])
    b = float(sys.b[0, 0])
    f = float(sys.f[0, 0])
    g = float(sys.g[0, 0])
    gamma = f
    residual = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        m = g + b * b * gamma
        if m == 0.0:
            raise SingularInnerMatrix("g + b' gamma b is singular")
        nxt = f + a * a * (gamma - b * b * gamma * gamma / m)
        residual = abs(nxt - gamma)
        gamma = nxt
        if residual <= tol:
            break
    if residual > tol:
        raise NoConvergence(
            f"control Riccati iteration did not reach tol={tol:g} in {max_iter} steps "
            f"(residual {residual:.3e})")
    m = g + b * b * gamma
    if m == 0.0:
        raise SingularInnerMatrix("g + b' gamma b is singular")
    nxt = f + a * a * (gamma - b * b * gamma * gamma / m)
    residual = abs(nxt - gamma)
    gain = b * gamma * a / m
    if abs(a - b * gain) >= 1.0:
        raise NoConvergence(
            f"stationary gain does not stabilize the plant "
            f"(closed loop magnitude {abs(a - b * gain):.6f})")
    return RiccatiSolution(gamma=np.array([[gamma]]), gain=np.array([[gain]]),
                           j_star=gamma * float(sys.psi_w[0, 0]),
                           iterations=iterations, residual=residual)


def solve_dare_control(sys: LqgSystem, tol: float = DEFAULT_TOL,
                       max_iter: int = MAX_ITER) -> RiccatiSolution:
    """Stationary control Riccati solution by fixed-point iteration from f.

    Returns the value matrix, the stationary feedback gain and the
    optimal long-run average cost trace(gamma @ psi_w). Raises
    NoConvergence if the iteration cap is hit or the implied closed loop
    is not stable, SingularInnerMatrix if g + b' gamma b is singular.
    """
    sys = validate_system(sys)
    if sys.is_scalar:
        return _solve_dare_scalar(sys, tol, max_iter)
    gamma = sys.f.copy()
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        nxt, gain = _control_step(sys.a, sys.b, sys.f, sys.g, gamma)
        residual = float(np.max(np.abs(nxt - gamma)))
        gamma = nxt
        if residual <= tol:
            break
    if residual > tol:
        raise NoConvergence(
            f"control Riccati iteration did not reach tol={tol:g} in {max_iter} steps "
            f"(residual {residual:.3e})")
    nxt, gain = _control_step(sys.a, sys.b, sys.f, sys.g, gamma)
    residual = float(np.max(np.abs(nxt - gamma)))
    rho = spectral_radius(sys.a - sys.b @ gain)
    if rho >= 1.0:
        raise NoConvergence(
            f"stationary gain does not stabilize the plant (spectral radius {rho:.6f}); "
            "the cost weights likely miss an unstable mode")
    j_star = float(np.trace(gamma @ sys.psi_w))
    return RiccatiSolution(gamma=gamma, gain=gain, j_star=j_star,
                           iterations=iterations, residual=residual)


def riccati_finite(sys: LqgSystem, n: int) -> FiniteHorizonSolution:
    """Finite-horizon backward recursion over n stages.

    Stage gains use the next stage's value matrix; the average optimal
    cost folds in the initial-state and per-stage noise contributions.
    """
    if n < 1:
        raise ValueError("horizon must be >= 1")
    sys = validate_system(sys)
    gammas = [None] * (n + 1)
    gains = [None] * n
    gammas[n] = sys.f.copy()
    for t in range(n - 1, -1, -1):
        gammas[t], gains[t] = _control_step(sys.a, sys.b, sys.f, sys.g, gammas[t + 1])
    total = float(np.trace(sys.psi_x @ gammas[0]))
    for t in range(1, n + 1):
        total += float(np.trace(sys.psi_w @ gammas[t]))
    return FiniteHorizonSolution(gammas=gammas, gains=gains, j_star_n=total / n)


def solve_lyapunov(m, q, tol: float = DEFAULT_TOL, max_doublings: int = 200,
                   stability_margin: float = 1e-9) -> np.ndarray:
    """Solve x = q + m' x m for a stable m by doubling the fixed-point map.

    Doubling (x <- x + p' x p, p <- p @ p) sums the series sum_k m'^k q m^k
    in log time, which matters near the stability boundary. The exit
    residual max|x - q - m' x m| is checked against tol.
    """
    m = np.asarray(m, dtype=float)
    q = symmetrize(np.asarray(q, dtype=float))
    rho = spectral_radius(m)
    if rho >= 1.0 - stability_margin:
        raise Unstable(f"spectral radius {rho:.8f} >= {1.0 - stability_margin}")
    x = q.copy()
    p = m.copy()
    scale = max(1.0, float(np.max(np.abs(q))))
    for _ in range(max_doublings):
        inc = p.T @ x @ p
        x = symmetrize(x + inc)
        p = p @ p
        if float(np.max(np.abs(inc))) <= 0.25 * tol * scale:
            residual = float(np.max(np.abs(x - q - m.T @ x @ m)))
            if residual <= tol * scale:
                return x
    raise NoConvergence("Lyapunov doubling iteration did not converge")


def filter_riccati(a, c, q, r, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                   init=None):
    """Stationary prediction-error covariance of a steady-state filter.

    Iterates sigma <- a (sigma - sigma c' (c sigma c' + r)^{-1} c sigma) a' + q
    from init (default q). The tolerance is relative to the iterate's
    scale, so tiny covariances converge as accurately as unit ones.
    Returns (sigma, iterations, residual).
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    q = symmetrize(np.asarray(q, dtype=float))
    r = symmetrize(np.asarray(r, dtype=float))
    sigma = q.copy() if init is None else symmetrize(np.asarray(init, dtype=float))
    q_scale = float(np.max(np.abs(q)))
    residual = np.inf
    for iterations in range(1, max_iter + 1):
        cs = c @ sigma
        innov = cs @ c.T + r
        gain_t = np.linalg.solve(innov, cs)
        nxt = symmetrize(a @ (sigma - cs.T @ gain_t) @ a.T + q)
        residual = float(np.max(np.abs(nxt - sigma)))
        sigma = nxt
        scale = max(float(np.max(np.abs(sigma))), q_scale, 1e-300)
        if residual <= tol * min(scale, 1.0e12):
            return sigma, iterations, residual
    raise NoConvergence(
        f"filter Riccati iteration did not reach tol={tol:g} in {max_iter} steps "
        f"(residual {residual:.3e})")


def filter_gain(sigma, c, r):
    """Steady filter gain sigma c' (c sigma c' + r)^{-1} for a solved covariance."""
    cs = c @ sigma
    return np.linalg.solve(cs @ c.T + r, cs).T
