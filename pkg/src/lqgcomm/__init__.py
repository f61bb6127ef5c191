"""Implicit-communication capacity of LQG control loops.

Analytic capacity (noiseless observations), an achievable-rate lower
bound (noisy observations), the receiver-side channel translation, and
a seeded Monte Carlo harness that validates every analytic quantity on
simulated trajectories.
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .capacity import (
    ChannelEigen,
    ScalarCapacity,
    WaterFillingResult,
    capacity_noiseless,
    capacity_scalar,
    channel_eigen,
    cost_with_signal,
    gamma_hat,
    water_fill,
)
from .errors import (
    DimensionMismatch,
    InfeasibleBudget,
    LqgcommError,
    NoConvergence,
    NotControllable,
    NotObservable,
    NotPositiveDefinite,
    NotPSD,
    PowerExceedsBudget,
    ScenarioParseError,
    SingularInnerMatrix,
    TooShort,
    Unstable,
)
from .estimation import (
    ControllerFilter,
    ExtendedSystem,
    build_extended,
    controller_filter,
    cost_noisy_policy,
    gamma_bar,
)
from .lower_bound import (
    InnerSolution,
    LowerBoundResult,
    RateEvaluation,
    inner_solve,
    outer_solve,
    rate_for,
)
from .riccati import (
    FiniteHorizonSolution,
    RiccatiSolution,
    riccati_finite,
    solve_dare_control,
    solve_lyapunov,
)
from .simulate import (
    EmpiricalEstimate,
    PamResult,
    RateEstimate,
    Trajectory,
    analytic_cost,
    empirical_cost,
    empirical_rate,
    pam_demo,
    replay_states,
    simulate,
    step_costs,
)
from .translation import (
    TranslationPipeline,
    analytic_channel_covariances,
    tau_ground_truth,
    tau_recursion_step,
    translate_stream,
)
from .systems import (
    LinearGaussianPolicy,
    LqgSystem,
    ObservationModel,
    make_observation,
    make_policy,
    make_system,
    validate_observation,
    validate_policy,
    validate_system,
)

__version__ = "0.1.0"
