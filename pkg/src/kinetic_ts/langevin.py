"""Underdamped Langevin transition kernel and per-round sampling.

One kernel step integrates the velocity/position dynamics exactly over a
window of length h with the potential gradient frozen at the window start,
so the transition is jointly Gaussian per coordinate with closed-form
means, variances and cross-covariance. A round runs I such steps (full or
minibatch gradients) and finishes with the resampling draw
x ~ N(x_I, 1/(n L rho) I) that inflates the output to the scaled-posterior
spread. The overdamped baseline x <- x - h grad U + sqrt(2h) xi is also
provided.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bandit_core import ArmHistory
from .potential import GradientRequest, PotentialSpec, grad_full, grad_stochastic

# Positions/velocities are clipped into this box after every step. Inert for
# any stable configuration; it keeps deliberately-unstable baseline runs
# (e.g. overdamped chains past their step-size limit) finite so arithmetic
# stays deterministic and arm scores never become NaN.
STATE_CLAMP = 1e12


class SamplerKind(enum.Enum):
    """Which posterior sampler drives a trajectory."""

    ULMC_FULL = "ulmc_full"
    ULMC_STOCHASTIC = "ulmc_stoch"
    OLMC_FULL = "olmc_full"
    OLMC_STOCHASTIC = "olmc_stoch"
    EXACT_CONJUGATE = "exact"

    @property
    def underdamped(self) -> bool:
        return self in (SamplerKind.ULMC_FULL, SamplerKind.ULMC_STOCHASTIC)

    @property
    def overdamped(self) -> bool:
        return self in (SamplerKind.OLMC_FULL, SamplerKind.OLMC_STOCHASTIC)

    @property
    def stochastic_gradient(self) -> bool:
        return self in (SamplerKind.ULMC_STOCHASTIC, SamplerKind.OLMC_STOCHASTIC)


@dataclass(frozen=True)
class UlmcParams:
    """Friction, noise amplitude, step size, steps per round, batch, scale."""

    gamma: float
    u: float
    step_h: float
    steps_I: int
    batch_k: Optional[int] = None
    scale_rho: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive")
        if not self.u > 0.0:
            raise ValueError("u must be positive")
        # h = 0 gives the identity kernel; useful for isolating the
        # resampling draw, so the lower bound is inclusive.
        if not 0.0 <= self.step_h < 1.0:
            raise ValueError("step size must satisfy 0 <= h < 1")
        if self.steps_I < 1:
            raise ValueError("need at least one step per round")
        if self.batch_k is not None and self.batch_k < 1:
            raise ValueError("batch size must be positive when given")
        if not self.scale_rho > 0.0:
            raise ValueError("scale rho must be positive")


@dataclass
class ChainState:
    """Position/velocity pair carried across steps and rounds.

    Arrays may be single states of shape (d,) or batched ensembles with any
    matching leading shape; the kernel acts coordinatewise.
    """

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.position.shape != self.velocity.shape:
            raise ValueError("position and velocity must have equal shapes")
        if not (np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.velocity))):
            raise ValueError("chain state must be finite")


def _fast_state(position: np.ndarray, velocity: np.ndarray) -> ChainState:
    """Internal constructor bypassing validation; inputs are arrays the
    stepper just produced (already clipped, finite by construction)."""
    st = ChainState.__new__(ChainState)
    st.position = position
    st.velocity = velocity
    return st


@dataclass(frozen=True)
class KernelCoefficients:
    """Closed-form scalars of the one-step Gaussian transition.

    With g = gamma*h and s = 1 - exp(-g):
        mean_vv = exp(-g)
        mean_vg = -(u/gamma) s
        mean_xv = s/gamma
        mean_xg = -(u/gamma)(h - s/gamma)
        var_x   = (2u/gamma)[h - exp(-2g)/(2 gamma) - 3/(2 gamma) + 2 exp(-g)/gamma]
        var_v   = u (1 - exp(-2g))
        cov_xv  = (u/gamma)[1 + exp(-2g) - 2 exp(-g)]
    plus the lower-triangular Cholesky factor of [[var_x, cov],[cov, var_v]].
    """

    mean_vv: float
    mean_vg: float
    mean_xv: float
    mean_xg: float
    var_x: float
    var_v: float
    cov_xv: float
    chol_xx: float
    chol_vx: float
    chol_vv: float


def _g_minus_s(g: float) -> float:
    """g - (1 - exp(-g)), evaluated without cancellation for small g."""
    if g < 0.5:
        # sum_{k>=2} (-1)^k g^k / k!
        term = g * g / 2.0
        total = term
        k = 3
        while True:
            term *= -g / k
            total += term
            if abs(term) <= 1e-18 * abs(total):
                return total
            k += 1
    return g + math.expm1(-g)


def _var_x_bracket(g: float) -> float:
    """f(g) = g - 3/2 + 2 exp(-g) - exp(-2g)/2, stable for small g.

    Writing s = 1 - exp(-g), the identity f = g - s - s^2/2 holds exactly
    and expands to sum_{k>=3} s^k / k, which avoids the catastrophic
    cancellation of the direct form when g is tiny.
    """
    s = -math.expm1(-g)
    if s < 0.5:
        term = s * s * s
        total = term / 3.0
        k = 4
        while True:
            term *= s
            contrib = term / k
            total += contrib
            if contrib <= 1e-18 * total:
                return total
            k += 1
    return g - s - 0.5 * s * s


def kernel_coefficients(gamma: float, u: float, step_h: float) -> KernelCoefficients:
    """Evaluate the transition-kernel scalars for one (gamma, u, h)."""
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    if not u > 0.0:
        raise ValueError("u must be positive")
    if step_h < 0.0:
        raise ValueError("step size must be nonnegative")
    g = gamma * step_h
    s = -math.expm1(-g)
    mean_vv = math.exp(-g)
    mean_vg = -(u / gamma) * s
    mean_xv = s / gamma
    mean_xg = -(u / gamma**2) * _g_minus_s(g)
    var_x = (2.0 * u / gamma**2) * _var_x_bracket(g)
    var_v = -u * math.expm1(-2.0 * g)
    cov_xv = (u / gamma) * s * s
    chol_xx = math.sqrt(var_x)
    if chol_xx > 0.0:
        chol_vx = cov_xv / chol_xx
        chol_vv = math.sqrt(max(var_v - chol_vx * chol_vx, 0.0))
    else:
        chol_vx = 0.0
        chol_vv = math.sqrt(var_v)
    return KernelCoefficients(
        mean_vv=mean_vv,
        mean_vg=mean_vg,
        mean_xv=mean_xv,
        mean_xg=mean_xg,
        var_x=var_x,
        var_v=var_v,
        cov_xv=cov_xv,
        chol_xx=chol_xx,
        chol_vx=chol_vx,
        chol_vv=chol_vv,
    )


def ulmc_step(
    state: ChainState,
    grad: np.ndarray,
    params: UlmcParams,
    rng: np.random.Generator,
    coeffs: Optional[KernelCoefficients] = None,
) -> ChainState:
    """One exact-integration kernel step from (x_i, v_i) to (x_{i+1}, v_{i+1}).

    ``grad`` must be the potential gradient at ``state.position``. Each
    coordinate is advanced independently with the shared 2x2 covariance;
    pass precomputed ``coeffs`` to avoid re-deriving them per step.
    """
    if grad.shape != state.position.shape:
        raise ValueError("gradient shape must match the state")
    c = coeffs if coeffs is not None else kernel_coefficients(
        params.gamma, params.u, params.step_h
    )
    noise = rng.standard_normal((2,) + state.position.shape)
    x = state.position + c.mean_xv * state.velocity + c.mean_xg * grad
    x += c.chol_xx * noise[0]
    v = c.mean_vv * state.velocity + c.mean_vg * grad
    v += c.chol_vx * noise[0] + c.chol_vv * noise[1]
    x.clip(-STATE_CLAMP, STATE_CLAMP, out=x)
    v.clip(-STATE_CLAMP, STATE_CLAMP, out=v)
    return _fast_state(x, v)


def olmc_step(
    state: ChainState,
    grad: np.ndarray,
    step_h: float,
    rng: np.random.Generator,
) -> ChainState:
    """Overdamped baseline: x <- x - h grad U + sqrt(2h) xi; velocity unused."""
    if grad.shape != state.position.shape:
        raise ValueError("gradient shape must match the state")
    if step_h < 0.0:
        raise ValueError("step size must be nonnegative")
    x = state.position - step_h * grad
    if step_h > 0.0:
        x += math.sqrt(2.0 * step_h) * rng.standard_normal(state.position.shape)
    x.clip(-STATE_CLAMP, STATE_CLAMP, out=x)
    return _fast_state(x, np.zeros_like(x))


def resampling_variance(n: int, lipschitz_L: float, scale_rho: float) -> float:
    """Per-coordinate variance 1/(n L rho) of the terminal resampling draw."""
    if n < 1:
        raise ValueError("resampling index must be at least 1")
    return 1.0 / (n * lipschitz_L * scale_rho)


def run_round(
    start: ChainState,
    spec: PotentialSpec,
    history: ArmHistory,
    params: UlmcParams,
    kind: SamplerKind,
    n: int,
    rng: np.random.Generator,
) -> ChainState:
    """Produce one posterior sample for an arm: I kernel steps + resampling.

    ``start`` is the state left by the arm's previous round (warm start);
    ``history`` is the arm's reward view. Gradients are full or minibatch
    according to ``kind``. Afterwards the position is redrawn around x_I
    with variance 1/(n L rho) while the velocity passes through unchanged
    (overdamped kinds carry no velocity).
    """
    if n < 1:
        raise ValueError("round index must be at least 1")
    if kind is SamplerKind.EXACT_CONJUGATE:
        raise ValueError("exact sampling bypasses the Langevin round")

    if kind.stochastic_gradient:
        if params.batch_k is None:
            raise ValueError("stochastic kinds need a batch size")

        def gradient(x):
            return grad_stochastic(
                spec, GradientRequest(point=x, history=history, batch=params.batch_k, rng=rng)
            )

    else:

        def gradient(x):
            return grad_full(spec, GradientRequest(point=x, history=history))

    state = start
    if kind.underdamped:
        coeffs = kernel_coefficients(params.gamma, params.u, params.step_h)
        for _ in range(params.steps_I):
            state = ulmc_step(state, gradient(state.position), params, rng, coeffs)
    else:
        for _ in range(params.steps_I):
            state = olmc_step(state, gradient(state.position), params.step_h, rng)

    std = math.sqrt(resampling_variance(n, spec.lipschitz_L, params.scale_rho))
    x = state.position + std * rng.standard_normal(state.position.shape)
    x.clip(-STATE_CLAMP, STATE_CLAMP, out=x)
    return _fast_state(x, state.velocity)
