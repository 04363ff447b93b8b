"""Theory-driven hyperparameters: scales, step schedules, concentration radii.

These formulas take the curvature constants of an arm's potential and
return the posterior scale rho, the step size / step count / batch size
schedules (square-root dimension law for the kinetic sampler, linear law
for the overdamped comparison), and high-probability radii around the true
parameter used by the coverage tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

E = math.e
DELTA_MAX = math.exp(-0.5)


def rho_exact(kappa: float, d: int) -> float:
    """Posterior scale for exact sampling: kappa^-3 / (8 d)."""
    if kappa < 1.0:
        raise ValueError("condition number must be at least 1")
    if d < 1:
        raise ValueError("dimension must be at least 1")
    return kappa**-3 / (8.0 * d)


def omega_approx(d: int, L: float, m: float, nu: float) -> float:
    """Omega = 16 d L^2 / (m nu) + 256."""
    if min(L, m, nu) <= 0.0 or d < 1:
        raise ValueError("all constants must be positive")
    return 16.0 * d * L * L / (m * nu) + 256.0


def rho_approx(kappa: float, d: int, m: float, nu: float, L: float) -> float:
    """Posterior scale for the approximate sampler: 1 / (8 kappa Omega)."""
    if kappa < 1.0:
        raise ValueError("condition number must be at least 1")
    return 1.0 / (8.0 * kappa * omega_approx(d, L, m, nu))


def theorem1_radius(m: float, n: int, D: float, Omega: float, delta: float) -> float:
    """High-probability radius sqrt((2e/(m n)) (D + 2 Omega log(1/delta)))."""
    if not 0.0 < delta < DELTA_MAX:
        raise ValueError("delta must lie in (0, e^-0.5)")
    if n < 1:
        raise ValueError("n must be at least 1")
    if m <= 0.0:
        raise ValueError("m must be positive")
    return math.sqrt((2.0 * E / (m * n)) * (D + 2.0 * Omega * math.log(1.0 / delta)))


def theorem3_radius(m: float, n: int, D: float, omega_hat: float, delta: float) -> float:
    """Radius for the sampled (approximate) posterior:
    sqrt((36e/(m n)) (D + 4 Omega_hat log(1/delta)))."""
    if not 0.0 < delta < DELTA_MAX:
        raise ValueError("delta must lie in (0, e^-0.5)")
    if n < 1:
        raise ValueError("n must be at least 1")
    if m <= 0.0:
        raise ValueError("m must be positive")
    return math.sqrt(
        (36.0 * E / (m * n)) * (D + 4.0 * omega_hat * math.log(1.0 / delta))
    )


@dataclass(frozen=True)
class ConcentrationConstants:
    """Constants D, Omega feeding a radius(n, delta) bound.

    ``approximate=False`` uses the exact-posterior form
        D = 8 d / rho + 2 log B,  Omega = 16 kappa^2 d + 256 / rho
    with the sqrt(2e/(m n)) prefactor; ``approximate=True`` uses
        D = 8 d + 2 log B,  Omega_hat = Omega + d / (36 kappa rho)
    with the sqrt(36e/(m n)) prefactor and the 4x log weight.
    """

    D: float
    Omega: float
    m: float
    approximate: bool = False

    def radius(self, n: int, delta: float) -> float:
        if self.approximate:
            return theorem3_radius(self.m, n, self.D, self.Omega, delta)
        return theorem1_radius(self.m, n, self.D, self.Omega, delta)


def exact_concentration(
    d: int, rho: float, kappa: float, m: float, log_b: float
) -> ConcentrationConstants:
    """Constants for draws from the exact scaled posterior."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    D = 8.0 * d / rho + 2.0 * log_b
    Omega = 16.0 * kappa**2 * d + 256.0 / rho
    return ConcentrationConstants(D=D, Omega=Omega, m=m, approximate=False)


def approx_concentration(
    d: int, kappa: float, m: float, nu: float, L: float, log_b: float
) -> ConcentrationConstants:
    """Constants for samples out of the Langevin pipeline.

    Omega is evaluated first, then rho_hat = 1/(8 kappa Omega), and only
    then the rho_hat-dependent correction enters Omega_hat; this is the one
    acyclic evaluation order.
    """
    Omega = omega_approx(d, L, m, nu)
    rho_hat = 1.0 / (8.0 * kappa * Omega)
    omega_hat = Omega + d / (36.0 * kappa * rho_hat)
    D = 8.0 * d + 2.0 * log_b
    return ConcentrationConstants(D=D, Omega=omega_hat, m=m, approximate=True)


@dataclass(frozen=True)
class ScheduleConstants:
    """Tuning constants hidden inside the asymptotic schedules."""

    c_h: float = 0.3
    c_i: float = 3.0
    c_k: float = 1.0
    n_dependent_h: bool = False

    def __post_init__(self):
        if min(self.c_h, self.c_i, self.c_k) <= 0.0:
            raise ValueError("schedule constants must be positive")


@dataclass(frozen=True)
class TheorySchedule:
    """Concrete schedules h(n), I, k for one dimension d.

    Step size scales as 1/sqrt(d) (optionally also 1/sqrt(n)), kinetic step
    count as sqrt(d), batch size as kappa^2. The overdamped comparison gets
    the linear-in-d step count.
    """

    d: int
    constants: ScheduleConstants

    def step_h_of(self, n: int = 1) -> float:
        if n < 1:
            raise ValueError("n must be at least 1")
        h = self.constants.c_h / math.sqrt(self.d)
        if self.constants.n_dependent_h:
            h /= math.sqrt(n)
        return h

    def steps_I_of(self) -> int:
        return math.ceil(self.constants.c_i * math.sqrt(self.d))

    def steps_I_overdamped(self) -> int:
        return math.ceil(self.constants.c_i * self.d)

    def batch_k_of(self, kappa: float) -> int:
        if kappa < 1.0:
            raise ValueError("condition number must be at least 1")
        return math.ceil(self.constants.c_k * kappa**2)


def theory_schedule(d: int, constants: ScheduleConstants | None = None) -> TheorySchedule:
    """Build the schedule bundle for dimension ``d``."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    return TheorySchedule(d=d, constants=constants or ScheduleConstants())
