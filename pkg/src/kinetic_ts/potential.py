"""Per-arm negative log posterior: gradients and curvature constants.

The potential for an arm with observed rewards R_1..R_n is

    U(x) = sum_j (R_j - <alpha, x>)^2 / (2 s2) + ||x - mu_0||^2 / (2 v0)

up to an additive constant, i.e. the negative log posterior of the
linear-Gaussian reward model under the isotropic Gaussian prior. The
samplers only ever see U through its gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bandit_core import Arm, ArmHistory, GaussianPrior


@dataclass(frozen=True)
class PotentialSpec:
    """An arm's potential plus smoothness/convexity constants.

    The constants bound the Hessian of the averaged potential U/n (data
    terms averaged, prior divided by n), matching the convention in which
    the likelihood constants are per observation:

        Hessian(U/n) = alpha alpha^T / s2 + I / (n v0)

    so ``lipschitz_L`` is its largest eigenvalue and ``convexity_m`` the
    smallest (the prior supplies all strong convexity once d >= 2, the
    reward term being rank one).
    """

    arm: Arm
    prior: GaussianPrior
    lipschitz_L: float
    convexity_m: float
    reward_convexity_nu: float
    condition_kappa: float
    prior_quality_logB: float

    def __post_init__(self):
        if not (self.lipschitz_L >= self.convexity_m > 0.0):
            raise ValueError("need L >= m > 0")
        if self.reward_convexity_nu <= 0.0:
            raise ValueError("nu must be positive")
        if self.prior_quality_logB < 0.0:
            raise ValueError("log B must be nonnegative")
        kappa = self.lipschitz_L / self.convexity_m
        if abs(self.condition_kappa - kappa) > 1e-9 * max(1.0, kappa):
            raise ValueError("condition_kappa must equal L/m")


@dataclass(frozen=True)
class GradientRequest:
    """Point + data view for one gradient evaluation.

    ``batch`` (and then ``rng``) are present exactly when a stochastic
    estimate is requested.
    """

    point: np.ndarray
    history: ArmHistory
    batch: Optional[int] = None
    rng: Optional[np.random.Generator] = None


def grad_full(spec: PotentialSpec, req: GradientRequest) -> np.ndarray:
    """Full gradient of U at ``req.point``.

    grad U(x) = sum_j alpha (<alpha,x> - R_j) / s2 + (x - mu_0) / v0
    computed from the history's running count and sum, so the cost is O(d)
    regardless of how many rewards the arm has seen.
    """
    if req.batch is not None:
        raise ValueError("grad_full takes a request without a batch size")
    x = req.point
    alpha = spec.arm.feature
    if x.shape != alpha.shape:
        raise ValueError("point dimension does not match the arm feature")
    n = req.history.count
    s2 = spec.arm.reward_noise_var
    lik = alpha * ((n * float(alpha @ x) - req.history.total) / s2)
    return lik + (x - spec.prior.mean) / spec.prior.var


def grad_stochastic(spec: PotentialSpec, req: GradientRequest) -> np.ndarray:
    """Minibatch gradient estimate of U at ``req.point``.

    A subset S of the rewards is drawn uniformly without replacement with
    |S| = min(n, batch); the likelihood part is scaled by n/|S| so the
    estimate is unbiased. When batch >= n the full data set is used and the
    generator is not consumed, which keeps a stochastic run's random stream
    aligned with the full-gradient run.
    """
    if req.batch is None or req.batch < 1:
        raise ValueError("grad_stochastic needs a positive batch size")
    x = req.point
    alpha = spec.arm.feature
    if x.shape != alpha.shape:
        raise ValueError("point dimension does not match the arm feature")
    n = req.history.count
    s2 = spec.arm.reward_noise_var
    size = min(n, req.batch)
    prior_term = (x - spec.prior.mean) / spec.prior.var
    if size == 0:
        return prior_term
    if size == n:
        subtotal = req.history.total
    else:
        if req.rng is None:
            raise ValueError("a generator is required when subsampling")
        idx = req.rng.choice(n, size=size, replace=False)
        subtotal = float(req.history.rewards[idx].sum())
    lik = alpha * ((n / size) * (size * float(alpha @ x) - subtotal) / s2)
    return lik + prior_term


def constants_for(arm: Arm, prior: GaussianPrior, n: int) -> PotentialSpec:
    """Curvature constants of the averaged potential after n pulls.

    With n > 0 the averaged Hessian is alpha alpha^T / s2 + I/(n v0), hence
        L = ||alpha||^2 / s2 + 1/(n v0),   m = 1/(n v0)
    (m is tight for d >= 2; for d = 1 it is still a valid lower bound).
    With n = 0 only the prior exists and L = m = 1/v0.
    """
    if n < 0:
        raise ValueError("pull count must be nonnegative")
    v0 = prior.var
    if n == 0:
        L = m = 1.0 / v0
    else:
        m = 1.0 / (n * v0)
        L = arm.feature_norm**2 / arm.reward_noise_var + m
    log_b = float(np.sum((arm.true_param - prior.mean) ** 2)) / (2.0 * v0)
    return PotentialSpec(
        arm=arm,
        prior=prior,
        lipschitz_L=L,
        convexity_m=m,
        reward_convexity_nu=1.0 / arm.reward_noise_var,
        condition_kappa=L / m,
        prior_quality_logB=log_b,
    )


def full_potential_smoothness(arm: Arm, prior: GaussianPrior, n: int) -> float:
    """Largest Hessian eigenvalue of the unaveraged potential U itself:
    n ||alpha||^2 / s2 + 1/v0. This is what step-size stability and the
    theory's u = 1/L selection refer to when the sampler consumes the full
    summed gradient."""
    if n < 0:
        raise ValueError("pull count must be nonnegative")
    return n * arm.feature_norm**2 / arm.reward_noise_var + 1.0 / prior.var
