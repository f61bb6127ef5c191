"""Pure-numpy reference kernels for the sequential hot loops.

These mirror the compiled kernels in `_native` operation for operation;
the compiled module is preferred at import time when available. Shapes:
states are rows, time runs down axis 0, and every recursion is written
exactly as the defining equations evaluate it so that a replay with the
recorded noises reproduces the stored trajectory.
"""
from __future__ import annotations

import numpy as np


def sim_noiseless(a, b, k_bar, s, w, x1):
    """Closed loop u_t = -k x_t + s_t, x_{t+1} = a x_t + b u_t + w_t.

    s: (n, d2), w: (n, d1), x1: (d1,). Returns states (n+1, d1) and
    inputs (n, d2).
    """
    n = s.shape[0]
    d1 = a.shape[0]
    d2 = b.shape[1]
    x = np.empty((n + 1, d1))
    u = np.empty((n, d2))
    x[0] = x1
    for t in range(n):
        u[t] = s[t] - k_bar @ x[t]
        x[t + 1] = a @ x[t] + b @ u[t] + w[t]
    return x, u


def sim_noisy(a, b, k_bar, l_c, d_c, s, w, q, x1):
    """Closed loop through the controller's steady-state filter.

    q holds n+1 observation noises (q[0] corrupts the first
    observation). The filter starts from a zero prior, so the first
    estimate is l_c @ o_1. Returns (x, xcheck, u, o).
    """
    n = s.shape[0]
    d1 = a.shape[0]
    d2 = b.shape[1]
    d3 = d_c.shape[0]
    x = np.empty((n + 1, d1))
    xcheck = np.empty((n + 1, d1))
    u = np.empty((n, d2))
    o = np.empty((n + 1, d3))
    x[0] = x1
    o[0] = d_c @ x[0] + q[0]
    xcheck[0] = l_c @ o[0]
    for t in range(n):
        u[t] = s[t] - k_bar @ xcheck[t]
        x[t + 1] = a @ x[t] + b @ u[t] + w[t]
        o[t + 1] = d_c @ x[t + 1] + q[t + 1]
        xp = a @ xcheck[t] + b @ u[t]
        xcheck[t + 1] = xp + l_c @ (o[t + 1] - d_c @ xp)
    return x, xcheck, u, o


def kf_innovations(a, d, l, z, u_pred, rho1):
    """Steady-gain filter pass producing one-step innovations.

    z: (n+1, dz) observations; u_pred: optional (n, drho) known input
    contribution added in the prediction step; rho1: initial filtered
    state. Returns innovations (n, dz) and filtered states (n+1, drho).
    """
    n = z.shape[0] - 1
    drho = a.shape[0]
    dz = d.shape[0]
    innov = np.empty((n, dz))
    rho = np.empty((n + 1, drho))
    rho[0] = rho1
    for t in range(n):
        pred = a @ rho[t]
        if u_pred is not None:
            pred = pred + u_pred[t]
        innov[t] = z[t + 1] - d @ pred
        rho[t + 1] = pred + l @ innov[t]
    return innov, rho


def linear_recursion(m, g, x0):
    """x_{t+1} = m x_t + g_t from x_0; returns all n+1 iterates."""
    n = g.shape[0]
    d = m.shape[0]
    x = np.empty((n + 1, d))
    x[0] = x0
    for t in range(n):
        x[t + 1] = m @ x[t] + g[t]
    return x
