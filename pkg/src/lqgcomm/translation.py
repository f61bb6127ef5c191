"""Receiver-side translation of observations into a clean Gaussian channel.

Running the receiver's steady filter and smoother over the stacked
system turns the observation stream into outputs ybar_t = d_r b s_t +
beta_t, where beta is a stationary hidden-Markov noise. The map is
causal in z^{t+1} and loses no information about the signal: z_{t+1}
can be rebuilt from ybar_t and z^t.
"""
from __future__ import annotations

import numpy as np

from . import _kernels as kernels
from .errors import DimensionMismatch
from .estimation import ExtendedSystem
from .linalg import symmetrize


class TranslationPipeline:
    """Streaming state for the translation: one pipeline per stream.

    Carries the running filtered estimate, so successive calls to
    translate_stream continue where the previous chunk ended. Not
    shareable across threads; build one per stream.
    """

    def __init__(self, ext: ExtendedSystem, pinv_cond_limit: float = 1e10):
        self.ext = ext
        n = ext.a_rho.shape[0]
        self.iaq = np.eye(n) - ext.a_rho @ ext.q_rho
        self.iaq_inv = np.linalg.inv(self.iaq)
        gram = ext.l_rho.T @ ext.l_rho
        if np.linalg.cond(gram) <= pinv_cond_limit:
            self.l_rho_pinv = np.linalg.solve(gram, ext.l_rho.T)
        else:  # fall back to an SVD pseudo-inverse for ill-conditioned gains
            self.l_rho_pinv = np.linalg.pinv(ext.l_rho)
        self.effective_input_map = ext.obs.d_r @ ext.sys.b
        self.rho_hat = np.zeros(n)
        self.steps = 0

    def reset(self):
        self.rho_hat = np.zeros_like(self.rho_hat)
        self.steps = 0


def translate_stream(pipeline: TranslationPipeline, z_seq) -> np.ndarray:
    """Map observations z^{n+1} to channel outputs ybar^n, causally.

    Each output uses only observations up to the next step: the filter
    innovation is lifted by the smoother correction and projected back
    through the gain's left inverse. Advances the pipeline state.
    """
    ext = pipeline.ext
    z = np.ascontiguousarray(z_seq, dtype=float)
    if z.ndim != 2 or z.shape[1] != ext.d_rho.shape[0]:
        raise DimensionMismatch(f"z_seq must be (m, {ext.d_rho.shape[0]})")
    if z.shape[0] < 2:
        raise DimensionMismatch("z_seq needs at least 2 observations")
    innov, rho_filt = kernels.kf_innovations(ext.a_rho, ext.d_rho, ext.l_rho,
                                             z, None, pipeline.rho_hat)
    yhat = innov @ (pipeline.iaq @ ext.l_rho).T
    ybar = yhat @ (pipeline.l_rho_pinv @ pipeline.iaq_inv).T
    pipeline.rho_hat = rho_filt[-1]
    pipeline.steps += z.shape[0] - 1
    return ybar


def stacked_noises(ext: ExtendedSystem, s_t, w_t, q_next):
    """Lift per-step primitive noises into the stacked coordinates."""
    sys = ext.sys
    j = np.eye(sys.d1) - ext.cf.l_c @ ext.obs.d_c
    s_bar = np.concatenate([sys.b @ np.asarray(s_t, float), np.zeros(sys.d1)])
    w = np.asarray(w_t, float)
    w_bar = np.concatenate([w, j @ w])
    q_bar = np.concatenate([np.zeros(sys.d1), -ext.cf.l_c @ np.asarray(q_next, float)])
    return s_bar, w_bar, q_bar


def tau_recursion_step(ext: ExtendedSystem, tau, s_t, w_t, q_next, v_next) -> np.ndarray:
    """One step of the hidden channel-state recursion.

    tau_{t+1} = (I - l_rho d_rho) a_rho tau_t - l_rho v_{t+1}
              + (I - l_rho d_rho)(s_bar + w_bar + q_bar); the stationary
    law of tau is the filtered covariance sigma_rho_tilde.
    """
    n = ext.a_rho.shape[0]
    j = np.eye(n) - ext.l_rho @ ext.d_rho
    s_bar, w_bar, q_bar = stacked_noises(ext, s_t, w_t, q_next)
    return (j @ (ext.a_rho @ np.asarray(tau, float))
            - ext.l_rho @ np.asarray(v_next, float)
            + j @ (s_bar + w_bar + q_bar))


def tau_ground_truth(ext: ExtendedSystem, tau1, s, w, q, v) -> np.ndarray:
    """Whole-path version of tau_recursion_step for replay tests.

    s, w: (n, .); q, v: (n+1, .) with q[t+1]/v[t+1] entering step t.
    Returns (n+1, 2 d1).
    """
    sys = ext.sys
    n = s.shape[0]
    d1 = sys.d1
    two = ext.a_rho.shape[0]
    j = np.eye(two) - ext.l_rho @ ext.d_rho
    jc = np.eye(d1) - ext.cf.l_c @ ext.obs.d_c
    drive = np.empty((n, two))
    drive[:, :d1] = s @ sys.b.T + w
    drive[:, d1:] = w @ jc.T - q[1:] @ ext.cf.l_c.T
    g = drive @ j.T - v[1:] @ ext.l_rho.T
    return kernels.linear_recursion(j @ ext.a_rho, g, np.asarray(tau1, float))


def analytic_channel_covariances(ext: ExtendedSystem):
    """Stationary covariances of the translated output and its noise:
    (d_rho sigma_rho d_rho' + psi_v, d_rho pi d_rho' + psi_v)."""
    d = ext.d_rho
    psi_v = ext.obs.psi_v
    cov_ybar = symmetrize(d @ ext.sigma_rho @ d.T + psi_v)
    cov_beta = symmetrize(d @ ext.pi @ d.T + psi_v)
    return cov_ybar, cov_beta
