"""Synthetic Gaussian bandit environment and the exact conjugate posterior.

Each arm has a fixed feature vector ``alpha`` and an unknown true parameter
``x_*``; pulling the arm returns ``<alpha, x_*> + noise``. Because both the
likelihood and the prior are Gaussian, the posterior over ``x`` is Gaussian
in closed form, which gives us an exact-sampling baseline and an oracle for
testing the Langevin samplers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Arm:
    """A single arm: feature vector, true parameter, reward noise variance."""

    feature: np.ndarray
    true_param: np.ndarray
    reward_noise_var: float

    def __post_init__(self):
        feature = np.asarray(self.feature, dtype=float)
        true_param = np.asarray(self.true_param, dtype=float)
        object.__setattr__(self, "feature", feature)
        object.__setattr__(self, "true_param", true_param)
        if not np.all(np.isfinite(feature)):
            raise ValueError("arm feature must be finite")
        if not np.all(np.isfinite(true_param)):
            raise ValueError("arm true_param must be finite")
        if feature.shape != true_param.shape or feature.ndim != 1:
            raise ValueError("feature and true_param must be 1-d with equal length")
        if float(np.linalg.norm(feature)) <= 0.0:
            raise ValueError("arm feature must have positive norm")
        if not self.reward_noise_var > 0.0:
            raise ValueError("reward_noise_var must be positive")

    @property
    def dim(self) -> int:
        return self.feature.shape[0]

    @property
    def feature_norm(self) -> float:
        return float(np.linalg.norm(self.feature))

    @property
    def expected_reward(self) -> float:
        return float(self.feature @ self.true_param)


@dataclass(frozen=True)
class BanditInstance:
    """An ordered collection of arms sharing one parameter dimension."""

    arms: tuple
    dim: int = field(init=False)
    optimal_arm: int = field(init=False)

    def __post_init__(self):
        arms = tuple(self.arms)
        if len(arms) < 1:
            raise ValueError("instance needs at least one arm")
        d = arms[0].dim
        if any(a.dim != d for a in arms):
            raise ValueError("all arms must share the same dimension")
        rewards = [a.expected_reward for a in arms]
        # ties broken toward the lowest index
        best = int(np.argmax(rewards))
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "optimal_arm", best)

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    def gap(self, arm: int) -> float:
        return expected_regret_increment(self, arm)


@dataclass(frozen=True)
class GaussianPrior:
    """Isotropic Gaussian prior N(mean, var * I)."""

    mean: np.ndarray
    var: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        object.__setattr__(self, "mean", mean)
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise ValueError("prior mean must be a finite vector")
        if not self.var > 0.0:
            raise ValueError("prior variance must be positive")


class RewardHistory:
    """Append-only per-arm reward storage with running counts and sums.

    Confined to a single trajectory; rewards live in amortized-growth
    buffers so gradient code can take O(1) views without copies.
    """

    def __init__(self, num_arms: int):
        if num_arms < 1:
            raise ValueError("need at least one arm")
        self._buffers = [np.empty(8) for _ in range(num_arms)]
        self._counts = [0] * num_arms
        self._sums = [0.0] * num_arms

    def append(self, arm: int, reward: float) -> None:
        if not np.isfinite(reward):
            raise ValueError("reward must be finite")
        buf = self._buffers[arm]
        n = self._counts[arm]
        if n == buf.shape[0]:
            grown = np.empty(2 * n)
            grown[:n] = buf
            self._buffers[arm] = grown
            buf = grown
        buf[n] = reward
        self._counts[arm] = n + 1
        self._sums[arm] += float(reward)

    def count(self, arm: int) -> int:
        return self._counts[arm]

    def rewards(self, arm: int) -> np.ndarray:
        """Read-only view of the rewards observed for one arm."""
        view = self._buffers[arm][: self._counts[arm]]
        view.flags.writeable = False
        return view

    def arm_view(self, arm: int) -> "ArmHistory":
        return ArmHistory(
            rewards=self.rewards(arm),
            count=self._counts[arm],
            total=self._sums[arm],
        )

    @property
    def total_pulls(self) -> int:
        return sum(self._counts)


@dataclass(frozen=True)
class ArmHistory:
    """Snapshot view of one arm's reward history."""

    rewards: np.ndarray
    count: int
    total: float


@dataclass(frozen=True)
class ConjugatePosterior:
    """Exact Gaussian posterior N(mean, covariance) for one arm."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("covariance shape must match mean")
        sym_err = np.max(np.abs(cov - cov.T))
        scale = max(1.0, float(np.max(np.abs(cov))))
        if sym_err > 1e-12 * scale:
            raise ValueError("covariance must be symmetric")

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor; raises LinAlgError if not PD."""
        return np.linalg.cholesky(self.covariance)


def sample_reward(instance: BanditInstance, arm: int, rng: np.random.Generator) -> float:
    """Draw one reward from ``arm``: <alpha, x_*> + N(0, reward_noise_var)."""
    a = instance.arms[arm]
    return a.expected_reward + float(rng.normal(0.0, np.sqrt(a.reward_noise_var)))


def expected_regret_increment(instance: BanditInstance, arm: int) -> float:
    """Gap between the optimal arm's expected reward and ``arm``'s."""
    best = instance.arms[instance.optimal_arm].expected_reward
    return best - instance.arms[arm].expected_reward


def conjugate_update(prior: GaussianPrior, arm: Arm, rewards) -> ConjugatePosterior:
    """Exact Gaussian posterior of x given scalar rewards R_j ~ N(<alpha,x>, s2).

    Precision: Lambda = I/prior.var + (n/s2) alpha alpha^T
    Mean:      mu = Lambda^{-1} (prior.mean/prior.var + (sum_j R_j / s2) alpha)
    """
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size and not np.all(np.isfinite(rewards)):
        raise ValueError("rewards must be finite")
    d = arm.dim
    alpha = arm.feature
    s2 = arm.reward_noise_var
    n = rewards.size
    precision = np.eye(d) / prior.var + (n / s2) * np.outer(alpha, alpha)
    rhs = prior.mean / prior.var + (float(rewards.sum()) / s2) * alpha
    cov = np.linalg.inv(precision)
    cov = 0.5 * (cov + cov.T)
    mean = cov @ rhs
    return ConjugatePosterior(mean=mean, covariance=cov)


def sample_exact_posterior(
    post: ConjugatePosterior,
    scale: float,
    rng: np.random.Generator,
    chol: np.ndarray | None = None,
) -> np.ndarray:
    """Draw x ~ N(mean, covariance / scale).

    Scaling the log-density by ``scale`` divides the Gaussian covariance by
    it. ``chol`` may carry a precomputed Cholesky factor of the (unscaled)
    covariance to avoid refactorizing on repeated draws.
    """
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    if chol is None:
        chol = post.cholesky()
    z = rng.standard_normal(post.mean.shape[0])
    return post.mean + (chol @ z) / np.sqrt(scale)
