"""Seeded Monte Carlo harness: trajectories, empirical cost and rate,
and a toy PAM bit-transport demo over the loop.

Trajectories record every noise draw, so any recorded run can be
replayed bit for bit through the same kernel backend. All statistics
discard a burn-in prefix; the analytic formulas they are compared
against are steady-state statements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .capacity import water_fill, channel_eigen, gamma_hat
from .errors import DimensionMismatch, PowerExceedsBudget, TooShort
from .estimation import ExtendedSystem, controller_filter, cost_noisy_policy, gamma_bar
from .linalg import logdet_psd
from .riccati import RiccatiSolution, solve_dare_control
from .rng import gaussian_rows, stream
from .systems import (
    LinearGaussianPolicy,
    LqgSystem,
    ObservationModel,
    make_policy,
    validate_observation,
    validate_policy,
    validate_system,
)

DEFAULT_BURN_IN = 200


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One simulated run; noisy-observation fields are None otherwise.

    Indexing: x/o/z/v/q/xcheck have n+1 rows (time 1..n+1), u/s/w have
    n rows (time 1..n).
    """

    x: np.ndarray
    u: np.ndarray
    s: np.ndarray
    w: np.ndarray
    o: np.ndarray | None
    z: np.ndarray | None
    xcheck: np.ndarray | None
    v: np.ndarray | None
    q: np.ndarray | None
    scenario: str
    seed: int
    burn_in: int

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def noisy(self) -> bool:
        return self.z is not None


@dataclass(frozen=True)
class EmpiricalEstimate:
    value: float
    stderr: float
    n_used: int


@dataclass(frozen=True, eq=False)
class RateEstimate:
    """Information-rate estimate plus the sample covariances behind it."""

    value: float
    stderr: float
    n_used: int
    cov_blind: np.ndarray
    cov_informed: np.ndarray


def simulate(sys: LqgSystem, policy: LinearGaussianPolicy, n: int, seed: int,
             obs: ObservationModel | None = None, burn_in: int = DEFAULT_BURN_IN,
             scenario: str = "", s_override: np.ndarray | None = None) -> Trajectory:
    """Run the closed loop for n steps from a counter-based seed.

    Noiseless observations: u_t = -k_bar x_t + s_t. With an observation
    model, the controller runs its steady-state Kalman filter in the
    loop and feeds back the filtered estimate instead. s_override
    replaces the Gaussian communication signal with a caller-supplied
    sequence (used by the PAM demo).
    """
    if n < 1:
        raise ValueError("horizon must be >= 1")
    sys = validate_system(sys)
    policy = validate_policy(sys, policy)
    x1 = gaussian_rows(seed, "x1", 1, sys.psi_x)[0]
    w = gaussian_rows(seed, "w", n, sys.psi_w)
    if s_override is not None:
        s = np.ascontiguousarray(s_override, dtype=float)
        if s.shape != (n, sys.d2):
            raise DimensionMismatch(f"s_override must be {(n, sys.d2)}, got {s.shape}")
    else:
        s = gaussian_rows(seed, "s", n, policy.phi)
    if obs is None:
        x, u = kernels.sim_noiseless(sys.a, sys.b, policy.k_bar, s, w, x1)
        return Trajectory(x=x, u=u, s=s, w=w, o=None, z=None, xcheck=None,
                          v=None, q=None, scenario=scenario, seed=seed, burn_in=burn_in)
    obs = validate_observation(sys, obs)
    cf = controller_filter(sys, obs)
    q = gaussian_rows(seed, "q", n + 1, obs.psi_q)
    v = gaussian_rows(seed, "v", n + 1, obs.psi_v)
    x, xcheck, u, o = kernels.sim_noisy(sys.a, sys.b, policy.k_bar, cf.l_c,
                                        obs.d_c, s, w, q, x1)
    z = x @ obs.d_r.T + v
    return Trajectory(x=x, u=u, s=s, w=w, o=o, z=z, xcheck=xcheck, v=v, q=q,
                      scenario=scenario, seed=seed, burn_in=burn_in)


def replay_states(traj: Trajectory, sys: LqgSystem, policy: LinearGaussianPolicy,
                  obs: ObservationModel | None = None) -> np.ndarray:
    """Recompute the state path from the recorded noises.

    Pushes the recorded draws back through the same kernel backend, so a
    faithfully recorded trajectory reproduces bit for bit.
    """
    if traj.noisy:
        cf = controller_filter(sys, obs)
        x, _, _, _ = kernels.sim_noisy(sys.a, sys.b, policy.k_bar, cf.l_c,
                                       obs.d_c, traj.s, traj.w, traj.q, traj.x[0])
        return x
    x, _ = kernels.sim_noiseless(sys.a, sys.b, policy.k_bar, traj.s, traj.w, traj.x[0])
    return x


def step_costs(traj: Trajectory, sys: LqgSystem) -> np.ndarray:
    """Per-step quadratic cost x'Fx + u'Gu for t = 1..n."""
    xs = traj.x[:-1]
    return (np.einsum("ti,ij,tj->t", xs, sys.f, xs)
            + np.einsum("ti,ij,tj->t", traj.u, sys.g, traj.u))


def empirical_cost(traj: Trajectory, sys: LqgSystem, n_batches: int = 20,
                   ) -> EmpiricalEstimate:
    """Post-burn-in average cost with a batch-means standard error."""
    costs = step_costs(traj, sys)[traj.burn_in:]
    m = costs.shape[0]
    if m < 2 * n_batches:
        raise TooShort(f"{m} post-burn-in steps cannot fill {n_batches} batches")
    batch = m // n_batches
    means = costs[: batch * n_batches].reshape(n_batches, batch).mean(axis=1)
    stderr = float(means.std(ddof=1) / math.sqrt(n_batches))
    return EmpiricalEstimate(value=float(costs.mean()), stderr=stderr, n_used=m)


def analytic_cost(sys: LqgSystem, policy: LinearGaussianPolicy,
                  obs: ObservationModel | None = None,
                  riccati: RiccatiSolution | None = None) -> float:
    """Steady-state average cost of the policy, noiseless or noisy path.

    Noiseless: trace(gbar psi_w) + trace((B' gbar B + G) phi), which
    reduces to the optimal-gain ledger when k_bar is the LQG gain.
    """
    sys = validate_system(sys)
    if riccati is None:
        riccati = solve_dare_control(sys)
    if obs is None:
        gbar = gamma_bar(sys, policy.k_bar)
        weight = sys.b.T @ gbar @ sys.b + sys.g
        return float(np.trace(gbar @ sys.psi_w) + np.trace(weight @ policy.phi))
    cf = controller_filter(sys, obs, riccati)
    return cost_noisy_policy(sys, obs, cf, policy, riccati)


def _innovation_streams(traj: Trajectory, sys: LqgSystem,
                        policy: LinearGaussianPolicy,
                        ext: ExtendedSystem | None):
    """Innovations of the receiver's filters, without and with knowledge
    of the communication signal."""
    if not traj.noisy:
        # receiver sees states: innovations are closed-form
        closed = sys.a - sys.b @ policy.k_bar
        y = traj.x[1:] - traj.x[:-1] @ closed.T
        return y, y - traj.s @ sys.b.T
    if ext is None:
        raise ValueError("rate estimation on a noisy trajectory needs the extended system")
    drho = ext.a_rho.shape[0]
    rho1 = np.zeros(drho)
    blind, _ = kernels.kf_innovations(ext.a_rho, ext.d_rho, ext.l_rho,
                                      traj.z, None, rho1)
    s_bar = np.hstack([traj.s @ sys.b.T, np.zeros((traj.n, sys.d1))])
    informed, _ = kernels.kf_innovations(ext.a_rho, ext.d_rho, ext.l_pi,
                                         traj.z, s_bar, rho1)
    return blind, informed


def _sample_covs(blind: np.ndarray, informed: np.ndarray):
    cov_b = np.cov(blind, rowvar=False).reshape(blind.shape[1], -1)
    cov_i = np.cov(informed, rowvar=False).reshape(informed.shape[1], -1)
    return cov_b, cov_i


def _gaussian_rate(blind: np.ndarray, informed: np.ndarray) -> float:
    cov_b, cov_i = _sample_covs(blind, informed)
    return 0.5 * (logdet_psd(cov_b) - logdet_psd(cov_i))


def empirical_rate(traj: Trajectory, sys: LqgSystem, policy: LinearGaussianPolicy,
                   ext: ExtendedSystem | None = None, block: int = 1000,
                   n_boot: int = 100) -> RateEstimate:
    """Plug-in Gaussian information-rate estimate with a block-bootstrap
    standard error.

    Runs the receiver's filter twice over the trajectory, once treating
    the communication signal as noise and once as a known input, and
    takes half the log-det ratio of the sample innovation covariances.
    """
    blind, informed = _innovation_streams(traj, sys, policy, ext)
    blind = blind[traj.burn_in:]
    informed = informed[traj.burn_in:]
    m = blind.shape[0]
    if m < 2 * block:
        raise TooShort(f"{m} post-burn-in steps are too few for block={block}")
    cov_b, cov_i = _sample_covs(blind, informed)
    value = 0.5 * (logdet_psd(cov_b) - logdet_psd(cov_i))
    n_blocks = m // block
    blind_b = blind[: n_blocks * block].reshape(n_blocks, block, -1)
    informed_b = informed[: n_blocks * block].reshape(n_blocks, block, -1)
    rs = stream(traj.seed, "bootstrap")
    reps = np.empty(n_boot)
    for i in range(n_boot):
        pick = rs.integers(0, n_blocks, size=n_blocks)
        reps[i] = _gaussian_rate(blind_b[pick].reshape(-1, blind.shape[1]),
                                 informed_b[pick].reshape(-1, informed.shape[1]))
    return RateEstimate(value=value, stderr=float(reps.std(ddof=1)), n_used=m,
                        cov_blind=cov_b, cov_informed=cov_i)


_PAM_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])
# Gray labels for the 4 levels: bit pairs (MSB, LSB)
_PAM_BITS = np.array([[0, 0], [0, 1], [1, 1], [1, 0]])


@dataclass(frozen=True)
class PamResult:
    ber: float
    rate_used: float
    n_symbols: int
    allocation: float
    symbol_power: float


def pam_demo(sys: LqgSystem, k_bar: np.ndarray, bits, power_budget: float,
             seed: int, obs: ObservationModel | None = None,
             symbol_power: float | None = None,
             burn_in: int = DEFAULT_BURN_IN) -> PamResult:
    """Ship raw bits through the loop with uncoded 4-PAM on the strongest
    eigendirection; deliberately sub-capacity (per-symbol detection,
    noise memory ignored).

    bits may be an explicit 0/1 array or a count to draw at random. The
    constellation grid is designed from the budget's allocation along
    the chosen direction; symbol_power scales the transmitted energy
    and must not exceed that allocation.
    """
    sys = validate_system(sys)
    riccati = solve_dare_control(sys)
    k_bar = np.asarray(k_bar, dtype=float)
    eig = channel_eigen(sys)
    direction = eig.u[:, 0]

    ext = None
    if obs is None:
        prices = gamma_hat(sys, riccati, eig)
        wf = water_fill(eig, prices, power_budget)
        allocation = float(wf.phi_hat_diag[0])
        noise_cov = sys.psi_w
        input_map = sys.b @ direction
    else:
        # lazy imports: lower_bound/translation sit above this module
        from .estimation import build_extended
        from .lower_bound import inner_solve
        from .translation import analytic_channel_covariances

        obs = validate_observation(sys, obs)
        cf = controller_filter(sys, obs, riccati)
        inner = inner_solve(sys, obs, cf, k_bar, power_budget, riccati=riccati)
        allocation = float(direction @ inner.phi @ direction)
        ext = build_extended(sys, obs, cf, make_policy(k_bar, inner.phi))
        noise_cov = analytic_channel_covariances(ext)[1]
        input_map = obs.d_r @ sys.b @ direction

    power = allocation if symbol_power is None else float(symbol_power)
    if power > allocation * (1 + 1e-9) + 1e-15:
        raise PowerExceedsBudget(
            f"requested symbol power {power:g} exceeds the allocation {allocation:g}")

    if np.isscalar(bits) or np.ndim(bits) == 0:
        bit_arr = stream(seed, "bits").integers(0, 2, size=int(bits))
    else:
        bit_arr = np.asarray(bits, dtype=int) % 2
    if bit_arr.size % 2:
        bit_arr = np.append(bit_arr, 0)
    pairs = bit_arr.reshape(-1, 2)
    n_sym = pairs.shape[0]
    symbol_idx = np.array([np.where((_PAM_BITS == p).all(axis=1))[0][0] for p in pairs])

    # unit-average-power grid: E[level^2] = 5
    grid = _PAM_LEVELS / math.sqrt(5.0)
    tx_amp = math.sqrt(power)
    rx_amp = math.sqrt(allocation) if allocation > 0 else 1.0
    s_seq = np.outer(grid[symbol_idx] * tx_amp, direction)

    policy = make_policy(k_bar, np.zeros((sys.d2, sys.d2)))
    traj = simulate(sys, policy, n_sym, seed, obs=obs, burn_in=burn_in,
                    scenario="pam-demo", s_override=s_seq)
    if obs is None:
        closed = sys.a - sys.b @ policy.k_bar
        y = traj.x[1:] - traj.x[:-1] @ closed.T
    else:
        from .translation import TranslationPipeline, translate_stream

        y = translate_stream(TranslationPipeline(ext), traj.z)

    # per-symbol matched filter whitened by the marginal noise covariance
    h = np.linalg.solve(noise_cov, input_map)
    stat = (y @ h) / float(h @ input_map)
    decided = np.argmin(np.abs(stat[:, None] - grid[None, :] * rx_amp), axis=1)
    decoded_bits = _PAM_BITS[decided].reshape(-1)
    ber = float(np.mean(decoded_bits != pairs.reshape(-1)))
    return PamResult(ber=ber, rate_used=2.0, n_symbols=n_sym,
                     allocation=allocation, symbol_power=power)
