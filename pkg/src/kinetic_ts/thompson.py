"""Per-round Thompson sampling loop for a single seeded trajectory.

Every round draws one (approximate) posterior sample per arm, plays the
argmax of the implied expected rewards, feeds the observed reward back into
the played arm's state, and accumulates the expected regret. Langevin-based
kinds keep a warm-started chain per arm; the exact kind draws from the
closed-form conjugate posterior.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from . import langevin
from .bandit_core import (
    BanditInstance,
    ConjugatePosterior,
    GaussianPrior,
    RewardHistory,
    conjugate_update,
    expected_regret_increment,
    sample_exact_posterior,
    sample_reward,
)
from .langevin import ChainState, SamplerKind, UlmcParams, resampling_variance
from .potential import PotentialSpec, constants_for, full_potential_smoothness
from .schedule import ScheduleConstants, rho_approx, rho_exact, theory_schedule


@dataclass(frozen=True)
class TrajectoryConfig:
    """Everything one seeded trajectory needs besides its seed.

    ``u`` is either a positive number (used literally in the kernel) or
    "auto", which sets each arm's noise amplitude to 1/L with L the
    smoothness of that arm's full potential at its current data count; the
    latter is the selection that keeps the kernel contractive no matter how
    many rewards the potential has absorbed. ``rho_mode`` is "exact",
    "approx", or a fixed positive number.
    """

    instance: BanditInstance
    prior: GaussianPrior
    kind: SamplerKind
    horizon: int
    gamma: float = 2.0
    u: Union[float, str] = "auto"
    step_h: Optional[float] = None
    steps_i: Optional[int] = None
    batch_k: Optional[int] = None
    rho_mode: Union[float, str] = 1.0
    schedule: ScheduleConstants = field(default_factory=ScheduleConstants)
    advance_unplayed: bool = True

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if isinstance(self.u, str) and self.u != "auto":
            raise ValueError("u must be a positive number or 'auto'")
        if not isinstance(self.u, str) and not self.u > 0.0:
            raise ValueError("u must be a positive number or 'auto'")
        if isinstance(self.rho_mode, str):
            if self.rho_mode not in ("exact", "approx"):
                raise ValueError("rho_mode must be 'exact', 'approx' or a number")
        elif not self.rho_mode > 0.0:
            raise ValueError("fixed rho must be positive")

    def snapshot(self) -> dict:
        """Scalar summary of the configuration (stable across runs)."""
        return {
            "arms": self.instance.num_arms,
            "dim": self.instance.dim,
            "kind": self.kind.value,
            "horizon": self.horizon,
            "gamma": self.gamma,
            "u": self.u,
            "step_h": self.step_h,
            "steps_i": self.steps_i,
            "batch_k": self.batch_k,
            "rho_mode": self.rho_mode,
            "c_h": self.schedule.c_h,
            "c_i": self.schedule.c_i,
            "c_k": self.schedule.c_k,
            "n_dependent_h": self.schedule.n_dependent_h,
            "advance_unplayed": self.advance_unplayed,
        }


@dataclass
class ArmState:
    """Mutable per-arm bookkeeping for one trajectory.

    ``conjugate`` caches the closed-form posterior for the data count in
    ``conjugate_count``; it is re-derived from the history on demand, so
    Langevin-only trajectories never pay for posterior linear algebra.
    """

    index: int
    chain: ChainState
    params: UlmcParams
    spec: PotentialSpec
    conjugate: ConjugatePosterior
    conjugate_count: int = 0
    conjugate_chol: Optional[np.ndarray] = None
    needs_advance: bool = True

    def posterior(
        self, history: RewardHistory, prior: GaussianPrior, arm
    ) -> ConjugatePosterior:
        count = history.count(self.index)
        if count != self.conjugate_count:
            self.conjugate = conjugate_update(prior, arm, history.rewards(self.index))
            self.conjugate_count = count
            self.conjugate_chol = None
        return self.conjugate

    def chol(self) -> np.ndarray:
        if self.conjugate_chol is None:
            self.conjugate_chol = self.conjugate.cholesky()
        return self.conjugate_chol


@dataclass(frozen=True)
class RoundLog:
    round_n: int
    chosen_arm: int
    reward: float
    regret_increment: float
    cumulative_regret: float


@dataclass(frozen=True)
class TrajectoryResult:
    seed: int
    rounds: tuple
    sampler: SamplerKind
    config_snapshot: dict

    def regret_series(self) -> np.ndarray:
        return np.array([r.cumulative_regret for r in self.rounds])

    def chosen_arms(self) -> np.ndarray:
        return np.array([r.chosen_arm for r in self.rounds], dtype=int)


def select_arm(samples: List[np.ndarray], features: List[np.ndarray]) -> int:
    """argmax_a <alpha_a, x_a>, ties broken toward the lowest index."""
    if len(samples) == 0:
        raise ValueError("need at least one arm sample")
    if len(samples) != len(features):
        raise ValueError("samples and features must have equal lengths")
    scores = np.empty(len(samples))
    for i, (x, f) in enumerate(zip(samples, features)):
        if x.shape != f.shape:
            raise ValueError("sample/feature dimension mismatch")
        scores[i] = f @ x
    return int(np.argmax(scores))


def _arm_rho(config: TrajectoryConfig, spec_at_one: PotentialSpec) -> float:
    """Posterior scale for one arm, fixed for the whole trajectory.

    The schedule modes use the arm's curvature constants at the single-
    observation convention (prior-regularized per-observation Hessian), so
    the scale does not drift as data accumulates.
    """
    if isinstance(config.rho_mode, str):
        d = spec_at_one.arm.dim
        kappa = spec_at_one.condition_kappa
        if config.rho_mode == "exact":
            return rho_exact(kappa, d)
        return rho_approx(
            kappa,
            d,
            spec_at_one.convexity_m,
            spec_at_one.reward_convexity_nu,
            spec_at_one.lipschitz_L,
        )
    return float(config.rho_mode)


def _arm_params(
    config: TrajectoryConfig, arm_index: int, instance: BanditInstance,
    prior: GaussianPrior, count: int, rho: float, batch: Optional[int],
) -> UlmcParams:
    """Effective kernel parameters for an arm that has ``count`` rewards."""
    arm = instance.arms[arm_index]
    sched = theory_schedule(instance.dim, config.schedule)
    if config.u == "auto":
        u = 1.0 / full_potential_smoothness(arm, prior, count)
    else:
        u = float(config.u)
    if config.step_h is not None:
        h = config.step_h
    else:
        h = sched.step_h_of(max(count, 1) if config.schedule.n_dependent_h else 1)
    steps = config.steps_i if config.steps_i is not None else sched.steps_I_of()
    return UlmcParams(
        gamma=config.gamma, u=u, step_h=h, steps_I=steps, batch_k=batch, scale_rho=rho
    )


def init_arm_states(
    config: TrajectoryConfig, rng: np.random.Generator
) -> List[ArmState]:
    """Fresh per-arm states: chain at a prior draw with zero velocity."""
    instance, prior = config.instance, config.prior
    states = []
    for a, arm in enumerate(instance.arms):
        x0 = prior.mean + np.sqrt(prior.var) * rng.standard_normal(instance.dim)
        chain = ChainState(position=x0, velocity=np.zeros(instance.dim))
        spec_one = constants_for(arm, prior, 1)
        rho = _arm_rho(config, spec_one)
        batch = config.batch_k
        if batch is None and config.kind.stochastic_gradient:
            batch = theory_schedule(instance.dim, config.schedule).batch_k_of(
                spec_one.condition_kappa
            )
        params = _arm_params(config, a, instance, prior, 0, rho, batch)
        conj = ConjugatePosterior(
            mean=prior.mean.copy(), covariance=prior.var * np.eye(instance.dim)
        )
        states.append(
            ArmState(
                index=a,
                chain=chain,
                params=params,
                spec=constants_for(arm, prior, 0),
                conjugate=conj,
            )
        )
    return states


def _draw_sample(
    st: ArmState,
    history: RewardHistory,
    config: TrajectoryConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """One posterior sample for one arm, advancing its chain if due."""
    if config.kind is SamplerKind.EXACT_CONJUGATE:
        post = st.posterior(history, config.prior, config.instance.arms[st.index])
        return sample_exact_posterior(post, st.params.scale_rho, rng, chol=st.chol())
    n_eff = max(history.count(st.index), 1)
    if config.advance_unplayed or st.needs_advance:
        st.chain = langevin.run_round(
            st.chain,
            st.spec,
            history.arm_view(st.index),
            st.params,
            config.kind,
            n_eff,
            rng,
        )
        st.needs_advance = False
        return st.chain.position
    # frozen chain: redo only the terminal resampling draw around x_I
    std = np.sqrt(
        resampling_variance(n_eff, st.spec.lipschitz_L, st.params.scale_rho)
    )
    return st.chain.position + std * rng.standard_normal(st.chain.position.shape)


def _refresh_after_pull(
    st: ArmState,
    history: RewardHistory,
    config: TrajectoryConfig,
) -> None:
    """Re-derive constants and kernel parameters after new data.

    The conjugate cache is left stale; ArmState.posterior re-derives it
    from the history the next time exact sampling (or an oracle) asks.
    """
    arm = config.instance.arms[st.index]
    count = history.count(st.index)
    st.spec = constants_for(arm, config.prior, count)
    st.params = _arm_params(
        config, st.index, config.instance, config.prior, count,
        st.params.scale_rho, st.params.batch_k,
    )
    st.needs_advance = True


def play_round(
    arms: List[ArmState],
    instance: BanditInstance,
    history: RewardHistory,
    config: TrajectoryConfig,
    n: int,
    cumulative: float,
    rng: np.random.Generator,
) -> RoundLog:
    """Run Algorithm-1 round n: sample every arm, play one, update it."""
    if n < 1:
        raise ValueError("rounds are 1-indexed")
    samples = [_draw_sample(st, history, config, rng) for st in arms]
    chosen = select_arm(samples, [a.feature for a in instance.arms])
    reward = sample_reward(instance, chosen, rng)
    history.append(chosen, reward)
    _refresh_after_pull(arms[chosen], history, config)
    inc = expected_regret_increment(instance, chosen)
    return RoundLog(
        round_n=n,
        chosen_arm=chosen,
        reward=reward,
        regret_increment=inc,
        cumulative_regret=cumulative + inc,
    )


def run_trajectory(config: TrajectoryConfig, seed: int) -> TrajectoryResult:
    """Execute ``config.horizon`` rounds deterministically for one seed."""
    rng = np.random.default_rng(seed)
    history = RewardHistory(config.instance.num_arms)
    arms = init_arm_states(config, rng)
    rounds = []
    cumulative = 0.0
    for n in range(1, config.horizon + 1):
        log = play_round(arms, config.instance, history, config, n, cumulative, rng)
        cumulative = log.cumulative_regret
        rounds.append(log)
    return TrajectoryResult(
        seed=seed,
        rounds=tuple(rounds),
        sampler=config.kind,
        config_snapshot=config.snapshot(),
    )


def config_digest(config: TrajectoryConfig) -> str:
    """Short stable hash of the scalar configuration."""
    text = repr(sorted(config.snapshot().items()))
    return hashlib.sha256(text.encode()).hexdigest()[:12]
