"""Shared test helpers: random problem generators and brute-force oracles."""
from __future__ import annotations

import numpy as np

from lqgcomm.linalg import controllability_rank, spectral_radius
from lqgcomm.systems import LqgSystem, make_observation, make_system, validate_system

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


def golden_system() -> LqgSystem:
    """The scalar plant with a = b = f = g = psi_w = psi_x = 1."""
    one = [[1.0]]
    return validate_system(make_system(one, one, one, one, one, one))


def random_psd(rng, d, scale=1.0):
    m = rng.normal(size=(d, d))
    return scale * (m @ m.T) / d


def random_pd(rng, d, scale=1.0, floor=0.1):
    return random_psd(rng, d, scale) + floor * np.eye(d)


def random_system(rng, d1=None, d2=None, rho_max=0.95) -> LqgSystem:
    """A random controllable plant with PD cost and noise weights."""
    if d1 is None:
        d1 = int(rng.integers(1, 5))
    if d2 is None:
        d2 = int(rng.integers(1, d1 + 1))
    while True:
        a = rng.normal(size=(d1, d1))
        radius = spectral_radius(a)
        if radius > 0:
            a *= rng.uniform(0.3, rho_max) / radius
        b = rng.normal(size=(d1, d2))
        if controllability_rank(a, b) == d1:
            break
    sys = make_system(a, b, random_pd(rng, d1), random_pd(rng, d2),
                      random_pd(rng, d1), random_psd(rng, d1))
    return validate_system(sys)


def random_observation(rng, sys: LqgSystem, noise=1.0, d3=None):
    d1 = sys.d1
    if d3 is None:
        d3 = d1
    while True:
        d_c = rng.normal(size=(d3, d1)) + np.eye(d3, d1)
        d_r = rng.normal(size=(d1, d1)) + np.eye(d1)
        if abs(np.linalg.det(d_r)) > 0.1:
            break
    return make_observation(d_c, random_pd(rng, d3, noise, 0.2 * noise),
                            d_r, random_pd(rng, d1, noise, 0.2 * noise))


def lyapunov_kron_oracle(m, q):
    """Direct vectorized solve of x = q + m' x m via the Kronecker system."""
    m = np.asarray(m, float)
    q = np.asarray(q, float)
    d = m.shape[0]
    lhs = np.eye(d * d) - np.kron(m.T, m.T)
    x = np.linalg.solve(lhs, q.reshape(-1))
    return x.reshape(d, d)


def grid_capacity_max(lam, ghat_diag, v, points=200):
    """Brute-force water-filling oracle: best 0.5*sum(log1p(lam*phi)) over a
    per-axis grid of diagonal allocations obeying sum(ghat*phi) <= v.

    Only usable directions (lam > 0) get a grid axis; the grid spans
    [0, v/ghat_i] per axis. Evaluated in chunks to bound memory.
    """
    lam = np.asarray(lam, float)
    ghat_diag = np.asarray(ghat_diag, float)
    idx = np.where(lam > 1e-12)[0]
    if idx.size == 0 or v <= 0:
        return 0.0
    axes = [np.linspace(0.0, v / ghat_diag[i], points) for i in idx]
    k = len(axes)
    best = 0.0
    if k == 1:
        phi = axes[0]
        feas = ghat_diag[idx[0]] * phi <= v * (1 + 1e-12)
        vals = 0.5 * np.log1p(lam[idx[0]] * phi[feas])
        return float(np.max(vals, initial=0.0))
    # chunk over the first axis; broadcast the rest
    rest = np.meshgrid(*axes[1:], indexing="ij")
    rest_cost = sum(ghat_diag[idx[j + 1]] * rest[j] for j in range(k - 1))
    rest_val = sum(0.5 * np.log1p(lam[idx[j + 1]] * rest[j]) for j in range(k - 1))
    for phi0 in axes[0]:
        cost0 = ghat_diag[idx[0]] * phi0
        feas = rest_cost + cost0 <= v * (1 + 1e-12)
        if not np.any(feas):
            continue
        vals = rest_val[feas] + 0.5 * np.log1p(lam[idx[0]] * phi0)
        best = max(best, float(np.max(vals)))
    return best
