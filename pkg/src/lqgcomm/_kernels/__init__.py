"""Hot-loop kernels: compiled extension when built, numpy fallback otherwise.

Set LQGCOMM_PURE=1 to force the pure-Python backend (used by the
benchmark and for debugging). Within one backend, results are
bit-deterministic for identical inputs.
"""
import os

from . import pure

_impl = pure
BACKEND = "python"

if os.environ.get("LQGCOMM_PURE", "") in ("", "0"):
    try:
        from . import _native as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        pass


def _as_c(arr):
    import numpy as np
    return np.ascontiguousarray(arr, dtype=float)


def sim_noiseless(a, b, k_bar, s, w, x1):
    return _impl.sim_noiseless(_as_c(a), _as_c(b), _as_c(k_bar),
                               _as_c(s), _as_c(w), _as_c(x1))


def sim_noisy(a, b, k_bar, l_c, d_c, s, w, q, x1):
    return _impl.sim_noisy(_as_c(a), _as_c(b), _as_c(k_bar), _as_c(l_c),
                           _as_c(d_c), _as_c(s), _as_c(w), _as_c(q), _as_c(x1))


def kf_innovations(a, d, l, z, u_pred, rho1):
    up = None if u_pred is None else _as_c(u_pred)
    return _impl.kf_innovations(_as_c(a), _as_c(d), _as_c(l), _as_c(z), up, _as_c(rho1))


def linear_recursion(m, g, x0):
    return _impl.linear_recursion(_as_c(m), _as_c(g), _as_c(x0))
