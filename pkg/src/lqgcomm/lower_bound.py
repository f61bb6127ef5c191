"""Achievable-rate lower bound with noisy observations on both sides.

For a fixed feedback gain the best signal covariance solves a concave
problem (rate through the receiver's Riccati equation, linear budget);
the gain itself enters non-convexly and is searched derivative-free
with multistart. The reported value is achievable, hence a true lower
bound, regardless of how good the outer search is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .capacity import channel_eigen, water_fill
from .errors import InfeasibleBudget, NoConvergence, Unstable
from .estimation import ControllerFilter, build_extended, extended_blocks, gamma_bar
from .linalg import logdet_psd, psd_factor, spectral_radius, symmetrize
from .riccati import RiccatiSolution, filter_riccati, solve_dare_control
from .rng import stream
from .systems import (
    LinearGaussianPolicy,
    LqgSystem,
    ObservationModel,
    make_policy,
    validate_observation,
    validate_system,
)

STABILITY_MARGIN = 1e-6
_PENALTY = 1e18


@dataclass(frozen=True, eq=False)
class RateEvaluation:
    """Rate and budget accounting of one (k_bar, phi) policy."""

    rate: float
    sigma_rho: np.ndarray
    pi: np.ndarray
    budget_used: float
    budget_cap: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class InnerSolution:
    phi: np.ndarray
    value: float
    iterations: int
    budget_cap: float
    pi: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class LowerBoundResult:
    value: float
    k_bar_opt: np.ndarray
    phi_opt: np.ndarray
    inner_iterations: int
    outer_evaluations: int
    multistart_spread: float
    seed_value: float


def rate_for(sys: LqgSystem, obs: ObservationModel, cf: ControllerFilter,
             policy: LinearGaussianPolicy, v: float,
             riccati: RiccatiSolution | None = None) -> RateEvaluation:
    """Rate of a fixed policy: half the log-det gap between the receiver's
    blind and signal-aware innovation covariances. Feasibility against
    the budget is reported, not enforced."""
    sys = validate_system(sys)
    obs = validate_observation(sys, obs)
    if riccati is None:
        riccati = solve_dare_control(sys)
    ext = build_extended(sys, obs, cf, policy)
    d = ext.d_rho
    rate = 0.5 * (logdet_psd(d @ ext.sigma_rho @ d.T + obs.psi_v)
                  - logdet_psd(d @ ext.pi @ d.T + obs.psi_v))
    gbar = gamma_bar(sys, policy.k_bar)
    weight = sys.g + sys.b.T @ gbar @ sys.b
    budget_used = float(np.trace(weight @ policy.phi))
    penalty = float(np.trace((gbar - riccati.gamma) @ (cf.sigma_c - cf.sigma_c_tilde)))
    budget_cap = v - penalty
    feasible = budget_used <= budget_cap + 1e-9 * max(1.0, abs(v))
    return RateEvaluation(rate=rate, sigma_rho=ext.sigma_rho, pi=ext.pi,
                          budget_used=budget_used, budget_cap=budget_cap,
                          feasible=feasible)


class _FixedGainChannel:
    """Everything that depends on the gain but not on the signal covariance.

    Evaluating a candidate phi costs one warm-started Riccati solve; the
    signal-aware covariance (and its log-det) is computed once since it
    does not depend on phi.
    """

    def __init__(self, sys, obs, cf, k_bar, riccati, dare_tol=1e-12, pi_init=None):
        self.sys = sys
        self.obs = obs
        self.dare_tol = dare_tol
        self.k_bar = np.asarray(k_bar, dtype=float)
        self.gbar = gamma_bar(sys, self.k_bar)
        self.weight = symmetrize(sys.g + sys.b.T @ self.gbar @ sys.b)
        self.penalty = float(np.trace((self.gbar - riccati.gamma)
                                      @ (cf.sigma_c - cf.sigma_c_tilde)))
        policy0 = make_policy(self.k_bar, np.zeros((sys.d2, sys.d2)))
        self.a_rho, self.d_rho, _, psi_w_bar, psi_q_bar = extended_blocks(
            sys, obs, cf, policy0)
        self.base = psi_w_bar + psi_q_bar
        self.pi, _, _ = filter_riccati(self.a_rho, self.d_rho, self.base, obs.psi_v,
                                       tol=dare_tol, init=pi_init)
        self.logdet_beta = logdet_psd(self.d_rho @ self.pi @ self.d_rho.T + obs.psi_v)
        self._warm = None
        self.evaluations = 0

    def rate(self, phi: np.ndarray) -> float:
        d1 = self.sys.d1
        q = self.base.copy()
        q[:d1, :d1] += self.sys.b @ phi @ self.sys.b.T
        sigma, _, _ = filter_riccati(self.a_rho, self.d_rho, symmetrize(q),
                                     self.obs.psi_v, tol=self.dare_tol,
                                     init=self._warm)
        self._warm = sigma
        self.evaluations += 1
        return 0.5 * (logdet_psd(self.d_rho @ sigma @ self.d_rho.T + self.obs.psi_v)
                      - self.logdet_beta)


def _seed_factors(chan: _FixedGainChannel, cap: float):
    """Multistart seeds for the Cholesky factor: half-budget identity,
    water-filling shape, and a fixed random PSD direction."""
    sys = chan.sys
    d2 = sys.d2
    tr_w = max(float(np.trace(chan.weight)), 1e-300)
    seeds = [math.sqrt(0.5 * cap / tr_w) * np.eye(d2)]
    eig = channel_eigen(sys)
    ghat_bar = symmetrize(eig.u.T @ chan.weight @ eig.u)
    wf = water_fill(eig, ghat_bar, cap)
    if not wf.infinite and np.trace(wf.phi) > 0:
        seeds.append(psd_factor(wf.phi + 1e-12 * np.trace(wf.phi) / d2 * np.eye(d2)))
    rnd = stream(0, "inner").normal(size=(d2, d2))
    phi_r = rnd @ rnd.T
    spend = float(np.trace(chan.weight @ phi_r))
    if spend > 0:
        seeds.append(psd_factor(phi_r * (0.5 * cap / spend)))
    return seeds


def _project(c: np.ndarray, weight: np.ndarray, cap: float) -> np.ndarray:
    spend = float(np.trace(weight @ (c @ c.T)))
    if spend > cap and spend > 0:
        return c * math.sqrt(cap / spend)
    return c


def inner_solve(sys: LqgSystem, obs: ObservationModel, cf: ControllerFilter,
                k_bar, v: float, riccati: RiccatiSolution | None = None,
                rel_tol: float = 1e-8, max_iter: int = 2000,
                fd_step: float = 1e-5, phi_seed=None, pi_init=None) -> InnerSolution:
    """Best signal covariance for a fixed gain, by projected gradient
    ascent on a Cholesky factor of phi.

    The budget available to the signal is v minus the gain's estimation
    penalty; a negative budget raises InfeasibleBudget. Gradients are
    central finite differences on the lower-triangular entries, and
    iterates outside the trace budget are scaled radially back onto it.
    phi_seed/pi_init warm-start repeated solves at nearby gains (the
    problem is concave in phi, so the optimum does not depend on them).
    """
    sys = validate_system(sys)
    obs = validate_observation(sys, obs)
    if riccati is None:
        riccati = solve_dare_control(sys)
    k_bar = np.asarray(k_bar, dtype=float)
    if spectral_radius(sys.a - sys.b @ k_bar) >= 1.0 - STABILITY_MARGIN:
        raise Unstable("gain is not stabilizing within the search margin")
    chan = _FixedGainChannel(sys, obs, cf, k_bar, riccati, pi_init=pi_init)
    cap = v - chan.penalty
    d2 = sys.d2
    tiny = 1e-12 * max(1.0, abs(v))
    if cap < -tiny:
        raise InfeasibleBudget(
            f"estimation penalty {chan.penalty:.6g} exceeds the budget {v:.6g}")
    if cap <= tiny:
        return InnerSolution(phi=np.zeros((d2, d2)), value=0.0, iterations=0,
                             budget_cap=max(cap, 0.0), pi=chan.pi)

    tril = np.tril_indices(d2)
    scale = math.sqrt(cap / max(float(np.trace(chan.weight)), 1e-300))

    def objective(c):
        return chan.rate(c @ c.T)

    seeds = None
    if phi_seed is not None:
        spend = float(np.trace(chan.weight @ phi_seed))
        if spend >= 0.05 * cap:  # a near-zero seed cannot escape c = 0
            seeds = [psd_factor(phi_seed)]
    if seeds is None:
        seeds = _seed_factors(chan, cap)

    best_val = -np.inf
    best_c = None
    total_iters = 0
    for c0 in seeds:
        c = _project(c0.copy(), chan.weight, cap)
        val = objective(c)
        alpha = 1.0
        for _ in range(max_iter):
            total_iters += 1
            grad = np.zeros(len(tril[0]))
            for j, (ri, ci) in enumerate(zip(*tril)):
                h = fd_step * max(abs(c[ri, ci]), scale)
                cp = c.copy()
                cp[ri, ci] += h
                cm = c.copy()
                cm[ri, ci] -= h
                grad[j] = (objective(_project(cp, chan.weight, cap))
                           - objective(_project(cm, chan.weight, cap))) / (2 * h)
            gnorm = float(np.linalg.norm(grad))
            if gnorm == 0.0:
                break
            step_dir = np.zeros((d2, d2))
            step_dir[tril] = grad / gnorm
            improved = False
            while alpha > 1e-14:
                c_try = _project(c + alpha * scale * step_dir, chan.weight, cap)
                val_try = objective(c_try)
                if val_try > val:
                    improved = True
                    break
                alpha *= 0.5
            if not improved:
                break
            gain = val_try - val
            c, val = c_try, val_try
            alpha = min(alpha * 1.5, 1.0)
            if gain <= rel_tol * max(1.0, abs(val)):
                break
        if val > best_val:
            best_val = val
            best_c = c
    phi = symmetrize(best_c @ best_c.T)
    return InnerSolution(phi=phi, value=float(best_val), iterations=total_iters,
                         budget_cap=cap, pi=chan.pi)


def outer_solve(sys: LqgSystem, obs: ObservationModel, cf: ControllerFilter,
                v: float, riccati: RiccatiSolution | None = None,
                n_restarts: int = 5, seed: int = 0, maxfev: int | None = None,
                rel_tol: float = 1e-8) -> LowerBoundResult:
    """Search the feedback gain for the largest fixed-gain rate.

    Nelder-Mead over the gain entries, restarted from the LQG gain plus
    perturbed copies; candidates with a non-stabilizing closed loop or
    an infeasible budget score minus infinity. Restart perturbations
    come from independent counter-based streams, so the result does not
    depend on evaluation order. The returned value is never below the
    LQG-gain seed's.
    """
    sys = validate_system(sys)
    obs = validate_observation(sys, obs)
    if riccati is None:
        riccati = solve_dare_control(sys)
    k_opt = riccati.gain
    d2, d1 = k_opt.shape
    npar = d1 * d2
    if maxfev is None:
        maxfev = 60 * npar

    record = {"value": -np.inf, "k": k_opt, "phi": np.zeros((d2, d2)),
              "evals": 0, "inner_iters": 0, "restart_best": -np.inf,
              "warm_phi": None, "warm_pi": None}

    def score(kvec):
        record["evals"] += 1
        k_bar = kvec.reshape(d2, d1)
        if spectral_radius(sys.a - sys.b @ k_bar) >= 1.0 - STABILITY_MARGIN:
            return -math.inf
        try:
            inner = inner_solve(sys, obs, cf, k_bar, v, riccati=riccati,
                                rel_tol=rel_tol, phi_seed=record["warm_phi"],
                                pi_init=record["warm_pi"])
        except (InfeasibleBudget, Unstable, NoConvergence):
            return -math.inf
        record["warm_phi"] = inner.phi
        record["warm_pi"] = inner.pi
        record["inner_iters"] += inner.iterations
        record["restart_best"] = max(record["restart_best"], inner.value)
        if inner.value > record["value"]:
            record.update(value=inner.value, k=k_bar.copy(), phi=inner.phi)
        return inner.value

    def neg_score(kvec):
        val = score(kvec)
        return _PENALTY if not math.isfinite(val) else -val

    starts = [k_opt]
    k_scale = 1.0 + float(np.linalg.norm(k_opt)) / max(npar, 1)
    for i in range(1, n_restarts):
        gen = stream(seed, "restart", i)
        delta = 0.1 * k_scale * gen.normal(size=(d2, d1))
        k_try = k_opt + delta
        for _ in range(40):
            if spectral_radius(sys.a - sys.b @ k_try) < 1.0 - 10 * STABILITY_MARGIN:
                break
            delta *= 0.5
            k_try = k_opt + delta
        starts.append(k_try)

    seed_value = score(k_opt.ravel())
    restart_bests = []
    for k0 in starts:
        record["restart_best"] = -np.inf
        scipy.optimize.minimize(neg_score, k0.ravel(), method="Nelder-Mead",
                                options={"maxfev": maxfev, "xatol": 1e-7,
                                         "fatol": 1e-10})
        restart_bests.append(record["restart_best"])
    finite = [b for b in restart_bests if math.isfinite(b)]
    spread = float(max(finite) - min(finite)) if len(finite) > 1 else 0.0

    return LowerBoundResult(value=float(record["value"]), k_bar_opt=record["k"],
                            phi_opt=record["phi"],
                            inner_iterations=record["inner_iters"],
                            outer_evaluations=record["evals"],
                            multistart_spread=spread,
                            seed_value=float(seed_value))
