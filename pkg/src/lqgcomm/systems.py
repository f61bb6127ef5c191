"""Plant, sensor and policy descriptions with their validity checks.

The plant is x_{t+1} = A x_t + B u_t + w_t with w_t ~ N(0, psi_w),
x_1 ~ N(0, psi_x), quadratic stage cost x'Fx + u'Gu. Sensors are a pair
of noisy linear observations, one on the controller side and one on the
receiver side. A policy is a stabilizing feedback gain plus the
covariance of an additive Gaussian signal riding on the input.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, NotControllable, NotObservable, NotPositiveDefinite, NotPSD, Unstable
from .linalg import (
    as_matrix,
    check_psd,
    controllability_rank,
    is_pd,
    observability_rank,
    spectral_radius,
    symmetrize_checked,
)


def _freeze(*arrays):
    for arr in arrays:
        arr.setflags(write=False)


@dataclass(frozen=True, eq=False)
class LqgSystem:
    """The plant: dynamics (a, b), cost weights (f, g), noise (psi_w, psi_x)."""

    a: np.ndarray
    b: np.ndarray
    f: np.ndarray
    g: np.ndarray
    psi_w: np.ndarray
    psi_x: np.ndarray
    validated: bool = False

    def __post_init__(self):
        _freeze(self.a, self.b, self.f, self.g, self.psi_w, self.psi_x)

    @property
    def d1(self) -> int:
        return self.a.shape[0]

    @property
    def d2(self) -> int:
        return self.b.shape[1]

    @property
    def is_scalar(self) -> bool:
        return self.d1 == 1 and self.d2 == 1


def make_system(a, b, f, g, psi_w, psi_x=None) -> LqgSystem:
    """Build an LqgSystem from array-likes; psi_x defaults to psi_w."""
    a = as_matrix(a, "a")
    d1 = a.shape[0]
    b = as_matrix(b, "b")
    if a.shape != (d1, d1):
        raise DimensionMismatch(f"a must be square, got {a.shape}")
    if b.shape[0] != d1:
        raise DimensionMismatch(f"b must have {d1} rows, got {b.shape}")
    d2 = b.shape[1]
    f = as_matrix(f, "f", (d1, d1))
    g = as_matrix(g, "g", (d2, d2))
    psi_w = as_matrix(psi_w, "psi_w", (d1, d1))
    if psi_x is None:
        psi_x = psi_w.copy()
    psi_x = as_matrix(psi_x, "psi_x", (d1, d1))
    return LqgSystem(a=a, b=b, f=f, g=g, psi_w=psi_w, psi_x=psi_x)


def validate_system(sys: LqgSystem) -> LqgSystem:
    """Check the plant's standing assumptions and return a cleaned copy.

    Nearly-symmetric weight/covariance matrices are symmetrized before
    checking; psi_w must be positive definite, psi_x/f/g positive
    semidefinite, and (a, b) controllable.
    """
    if sys.validated:
        return sys
    d1, d2 = sys.d1, sys.d2
    if sys.a.shape != (d1, d1) or sys.b.shape != (d1, d2):
        raise DimensionMismatch("inconsistent a/b shapes")
    for name, mat, shape in (("f", sys.f, (d1, d1)), ("g", sys.g, (d2, d2)),
                             ("psi_w", sys.psi_w, (d1, d1)), ("psi_x", sys.psi_x, (d1, d1))):
        if mat.shape != shape:
            raise DimensionMismatch(f"{name} must have shape {shape}, got {mat.shape}")
    f = check_psd(sys.f, "f")
    g = check_psd(sys.g, "g")
    psi_x = check_psd(sys.psi_x, "psi_x")
    psi_w = symmetrize_checked(sys.psi_w, "psi_w")
    if not is_pd(psi_w):
        raise NotPositiveDefinite("psi_w must be positive definite")
    if controllability_rank(sys.a, sys.b) < d1:
        raise NotControllable(
            f"(a, b) is not controllable (rank {controllability_rank(sys.a, sys.b)} < {d1})")
    return replace(sys, f=f, g=g, psi_w=psi_w, psi_x=psi_x, validated=True)


@dataclass(frozen=True, eq=False)
class ObservationModel:
    """Noisy sensors: controller side (d_c, psi_q), receiver side (d_r, psi_v)."""

    d_c: np.ndarray
    psi_q: np.ndarray
    d_r: np.ndarray
    psi_v: np.ndarray

    def __post_init__(self):
        _freeze(self.d_c, self.psi_q, self.d_r, self.psi_v)

    @property
    def d3(self) -> int:
        return self.d_c.shape[0]


def make_observation(d_c, psi_q, d_r, psi_v) -> ObservationModel:
    d_c = as_matrix(d_c, "d_c")
    d3 = d_c.shape[0]
    return ObservationModel(
        d_c=d_c,
        psi_q=as_matrix(psi_q, "psi_q", (d3, d3)),
        d_r=as_matrix(d_r, "d_r"),
        psi_v=as_matrix(psi_v, "psi_v"),
    )


def validate_observation(sys: LqgSystem, obs: ObservationModel,
                         cond_limit: float = 1e12) -> ObservationModel:
    """Check sensor assumptions: PD noises, invertible d_r, observability."""
    d1 = sys.d1
    if obs.d_c.shape[1] != d1:
        raise DimensionMismatch(f"d_c must have {d1} columns, got {obs.d_c.shape}")
    if obs.d_r.shape != (d1, d1):
        raise DimensionMismatch(f"d_r must be {d1}x{d1}, got {obs.d_r.shape}")
    if obs.psi_v.shape != (d1, d1):
        raise DimensionMismatch(f"psi_v must be {d1}x{d1}, got {obs.psi_v.shape}")
    psi_q = symmetrize_checked(obs.psi_q, "psi_q")
    psi_v = symmetrize_checked(obs.psi_v, "psi_v")
    if not is_pd(psi_q):
        raise NotPositiveDefinite("psi_q must be positive definite")
    if not is_pd(psi_v):
        raise NotPositiveDefinite("psi_v must be positive definite")
    if np.linalg.cond(obs.d_r) > cond_limit:
        raise NotPSD(f"d_r is numerically singular (cond > {cond_limit:.1e})")
    if observability_rank(sys.a, obs.d_c) < d1:
        raise NotObservable("(a, d_c) is not observable")
    if observability_rank(sys.a, obs.d_r) < d1:
        raise NotObservable("(a, d_r) is not observable")
    return ObservationModel(d_c=obs.d_c.copy(), psi_q=psi_q, d_r=obs.d_r.copy(), psi_v=psi_v)


@dataclass(frozen=True, eq=False)
class LinearGaussianPolicy:
    """Input u_t = -k_bar @ state_estimate + s_t with s_t ~ N(0, phi)."""

    k_bar: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        _freeze(self.k_bar, self.phi)


def make_policy(k_bar, phi) -> LinearGaussianPolicy:
    return LinearGaussianPolicy(k_bar=as_matrix(k_bar, "k_bar"), phi=as_matrix(phi, "phi"))


def validate_policy(sys: LqgSystem, policy: LinearGaussianPolicy,
                    margin: float = 0.0) -> LinearGaussianPolicy:
    """Require a stabilizing gain and a PSD signal covariance."""
    d1, d2 = sys.d1, sys.d2
    if policy.k_bar.shape != (d2, d1):
        raise DimensionMismatch(f"k_bar must be {d2}x{d1}, got {policy.k_bar.shape}")
    if policy.phi.shape != (d2, d2):
        raise DimensionMismatch(f"phi must be {d2}x{d2}, got {policy.phi.shape}")
    rho = spectral_radius(sys.a - sys.b @ policy.k_bar)
    if rho >= 1.0 - margin:
        raise Unstable(f"closed loop is not stable: spectral radius {rho:.6f}")
    phi = check_psd(policy.phi, "phi")
    return LinearGaussianPolicy(k_bar=policy.k_bar.copy(), phi=phi)
