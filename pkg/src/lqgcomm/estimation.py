"""Steady-state estimation on both sides of the loop.

Controller side: a standard Kalman filter on (A, D_c) gives the optimal
cost under noisy observations. Receiver side: stacking the plant state
with the controller's estimation error gives a linear system the
receiver can filter and smooth with standard machinery, despite the
correlation between that error and the state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence
from .linalg import symmetrize
from .riccati import (
    DEFAULT_TOL,
    MAX_ITER,
    RiccatiSolution,
    filter_gain,
    filter_riccati,
    solve_dare_control,
    solve_lyapunov,
)
from .systems import (
    LinearGaussianPolicy,
    LqgSystem,
    ObservationModel,
    validate_observation,
    validate_policy,
    validate_system,
)


@dataclass(frozen=True, eq=False)
class ControllerFilter:
    """Controller-side steady state: prediction covariance sigma_c, gain l_c,
    filtered covariance sigma_c_tilde, and the optimal noisy-observation
    cost j_star_star."""

    sigma_c: np.ndarray
    l_c: np.ndarray
    sigma_c_tilde: np.ndarray
    j_star_star: float
    iterations: int
    residual: float


def controller_filter(sys: LqgSystem, obs: ObservationModel,
                      riccati: RiccatiSolution | None = None,
                      tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                      ) -> ControllerFilter:
    """Solve the controller's filter Riccati equation and the cost it implies.

    j_star_star = trace(F sigma_c_tilde) + trace(gamma (sigma_c - sigma_c_tilde)).
    """
    sys = validate_system(sys)
    obs = validate_observation(sys, obs)
    if riccati is None:
        riccati = solve_dare_control(sys)
    sigma_c, iterations, residual = filter_riccati(
        sys.a, obs.d_c, sys.psi_w, obs.psi_q, tol=tol, max_iter=max_iter)
    l_c = filter_gain(sigma_c, obs.d_c, obs.psi_q)
    sigma_c_tilde = symmetrize((np.eye(sys.d1) - l_c @ obs.d_c) @ sigma_c)
    j_star_star = float(np.trace(sys.f @ sigma_c_tilde)
                        + np.trace(riccati.gamma @ (sigma_c - sigma_c_tilde)))
    return ControllerFilter(sigma_c=sigma_c, l_c=l_c, sigma_c_tilde=sigma_c_tilde,
                            j_star_star=j_star_star, iterations=iterations,
                            residual=residual)


def gamma_bar(sys: LqgSystem, k_bar: np.ndarray) -> np.ndarray:
    """Value matrix of an arbitrary stabilizing gain:
    the fixed point of gbar = F + k'Gk + (A-Bk)' gbar (A-Bk)."""
    k_bar = np.asarray(k_bar, dtype=float)
    m = sys.a - sys.b @ k_bar
    q = sys.f + k_bar.T @ sys.g @ k_bar
    return solve_lyapunov(m, q)


def cost_noisy_policy(sys: LqgSystem, obs: ObservationModel, cf: ControllerFilter,
                      policy: LinearGaussianPolicy,
                      riccati: RiccatiSolution | None = None) -> float:
    """Long-run cost of u = -k_bar xhat + s under noisy observations:
    j_star_star + trace((B' gbar B + G) phi) + trace((gbar - gamma)(sigma_c - sigma_c_tilde))."""
    sys = validate_system(sys)
    policy = validate_policy(sys, policy)
    if riccati is None:
        riccati = solve_dare_control(sys)
    gbar = gamma_bar(sys, policy.k_bar)
    weight = sys.b.T @ gbar @ sys.b + sys.g
    return (cf.j_star_star
            + float(np.trace(weight @ policy.phi))
            + float(np.trace((gbar - riccati.gamma) @ (cf.sigma_c - cf.sigma_c_tilde))))


@dataclass(frozen=True, eq=False)
class ExtendedSystem:
    """Receiver-side view of the stacked state (plant state, controller error).

    Carries the stacked dynamics and noise covariances, both stationary
    prediction covariances (sigma_rho without knowledge of the signal,
    pi with it), the filter/smoother gains, and the inputs it was built
    from.
    """

    a_rho: np.ndarray
    d_rho: np.ndarray
    phi_bar: np.ndarray
    psi_w_bar: np.ndarray
    psi_q_bar: np.ndarray
    sigma_rho: np.ndarray
    pi: np.ndarray
    l_rho: np.ndarray
    q_rho: np.ndarray
    sigma_rho_tilde: np.ndarray
    l_pi: np.ndarray
    sys: LqgSystem
    obs: ObservationModel
    cf: ControllerFilter
    policy: LinearGaussianPolicy

    @property
    def d1(self) -> int:
        return self.sys.d1

    def iaq(self) -> np.ndarray:
        """I - a_rho q_rho, the smoother-correction factor."""
        n = self.a_rho.shape[0]
        return np.eye(n) - self.a_rho @ self.q_rho

    def iaq_residual(self) -> float:
        """Distance of I - a_rho q_rho from its closed form
        (phi_bar + psi_w_bar + psi_q_bar) sigma_rho^-1."""
        direct = self.iaq()
        closed = np.linalg.solve(
            self.sigma_rho.T, (self.phi_bar + self.psi_w_bar + self.psi_q_bar).T).T
        return float(np.max(np.abs(direct - closed)))


def extended_blocks(sys: LqgSystem, obs: ObservationModel, cf: ControllerFilter,
                    policy: LinearGaussianPolicy):
    """Stacked dynamics and noise covariances over (state, controller error)."""
    d1 = sys.d1
    j = np.eye(d1) - cf.l_c @ obs.d_c
    a_rho = np.block([[sys.a - sys.b @ policy.k_bar, sys.b @ policy.k_bar],
                      [np.zeros((d1, d1)), j @ sys.a]])
    d_rho = np.hstack([obs.d_r, np.zeros((d1, d1))])
    zero = np.zeros((d1, d1))
    phi_bar = np.block([[sys.b @ policy.phi @ sys.b.T, zero], [zero, zero]])
    psi_w_bar = np.block([[sys.psi_w, sys.psi_w @ j.T],
                          [j @ sys.psi_w, j @ sys.psi_w @ j.T]])
    psi_q_bar = np.block([[zero, zero], [zero, cf.l_c @ obs.psi_q @ cf.l_c.T]])
    return a_rho, d_rho, symmetrize(phi_bar), symmetrize(psi_w_bar), symmetrize(psi_q_bar)


def build_extended(sys: LqgSystem, obs: ObservationModel, cf: ControllerFilter,
                   policy: LinearGaussianPolicy, tol: float = DEFAULT_TOL,
                   max_iter: int = MAX_ITER) -> ExtendedSystem:
    """Assemble the stacked system and solve its two filter Riccati equations.

    sigma_rho treats the communication signal as extra noise; pi assumes
    it is known, so pi does not depend on phi. The smoother gain q_rho
    and filtered covariance sigma_rho_tilde come from the steady state.
    """
    sys = validate_system(sys)
    obs = validate_observation(sys, obs)
    policy = validate_policy(sys, policy)
    a_rho, d_rho, phi_bar, psi_w_bar, psi_q_bar = extended_blocks(sys, obs, cf, policy)
    base = psi_w_bar + psi_q_bar
    sigma_rho, _, _ = filter_riccati(a_rho, d_rho, phi_bar + base, obs.psi_v,
                                     tol=tol, max_iter=max_iter)
    pi, _, _ = filter_riccati(a_rho, d_rho, base, obs.psi_v, tol=tol, max_iter=max_iter)
    l_rho = filter_gain(sigma_rho, d_rho, obs.psi_v)
    l_pi = filter_gain(pi, d_rho, obs.psi_v)
    n = a_rho.shape[0]
    sigma_rho_tilde = symmetrize((np.eye(n) - l_rho @ d_rho) @ sigma_rho)
    q_rho = np.linalg.solve(sigma_rho.T, (sigma_rho_tilde @ a_rho.T).T).T
    ext = ExtendedSystem(a_rho=a_rho, d_rho=d_rho, phi_bar=phi_bar,
                         psi_w_bar=psi_w_bar, psi_q_bar=psi_q_bar,
                         sigma_rho=sigma_rho, pi=pi, l_rho=l_rho, q_rho=q_rho,
                         sigma_rho_tilde=sigma_rho_tilde, l_pi=l_pi,
                         sys=sys, obs=obs, cf=cf, policy=policy)
    if __debug__:
        scale = max(1.0, float(np.max(np.abs(sigma_rho))))
        if ext.iaq_residual() > 1e-4 * scale:
            raise NoConvergence(
                f"extended-system identity residual {ext.iaq_residual():.3e} "
                "suggests an unconverged or ill-conditioned solution")
    return ext
