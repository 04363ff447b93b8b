"""Thompson sampling for multi-armed bandits with kinetic Langevin samplers."""

from .bandit_core import (
    Arm,
    ArmHistory,
    BanditInstance,
    ConjugatePosterior,
    GaussianPrior,
    RewardHistory,
    conjugate_update,
    expected_regret_increment,
    sample_exact_posterior,
    sample_reward,
)
from .langevin import (
    ChainState,
    KernelCoefficients,
    SamplerKind,
    UlmcParams,
    kernel_coefficients,
    olmc_step,
    resampling_variance,
    run_round,
    ulmc_step,
)
from .potential import (
    GradientRequest,
    PotentialSpec,
    constants_for,
    full_potential_smoothness,
    grad_full,
    grad_stochastic,
)
from .schedule import (
    ConcentrationConstants,
    ScheduleConstants,
    TheorySchedule,
    approx_concentration,
    exact_concentration,
    omega_approx,
    rho_approx,
    rho_exact,
    theorem1_radius,
    theorem3_radius,
    theory_schedule,
)
from .thompson import (
    ArmState,
    RoundLog,
    TrajectoryConfig,
    TrajectoryResult,
    play_round,
    run_trajectory,
    select_arm,
)
from .experiments import (
    AggregateCurve,
    ConfigError,
    ScenarioConfig,
    Variant,
    bootstrap_ci,
    emit_csv,
    load_scenario,
    make_instance,
    preset_scenarios,
    read_csv,
    run_scenario,
)

__version__ = "0.1.0"
