"""Counter-based random streams for reproducible simulation.

Each (seed, role[, index]) pair maps to an independent Philox stream, so
the process noise, observation noises and communication signal are
drawn independently and can be regenerated out of order. Identical
seeds give bit-identical draws regardless of what else has been
sampled.
"""
from __future__ import annotations

import numpy as np

from .linalg import psd_factor

_ROLE_IDS = {
    "x1": 1,
    "w": 2,
    "v": 3,
    "q": 4,
    "s": 5,
    "bits": 6,
    "restart": 7,
    "inner": 8,
    "bootstrap": 9,
}

_MASK64 = (1 << 64) - 1


def stream(seed: int, role: str, index: int = 0) -> np.random.Generator:
    """Independent generator keyed by (seed, role, index)."""
    role_id = _ROLE_IDS[role]
    key = (role_id << 96) | ((index & _MASK64) << 32) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_rows(seed: int, role: str, n: int, cov: np.ndarray,
                  index: int = 0) -> np.ndarray:
    """n i.i.d. draws from N(0, cov), one per row."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = cov.shape[0]
    z = stream(seed, role, index).standard_normal((n, d))
    return z @ psd_factor(cov).T
