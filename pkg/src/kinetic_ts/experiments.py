"""Scenario definitions, parallel trajectory execution, and aggregation.

A scenario is a bandit instance (generated from its own seed) plus a set of
sampler variants to compare. Each variant runs M seeded trajectories whose
per-round mean cumulative regret is wrapped in bootstrap confidence bands
and written to CSV. Aggregation always folds results in trajectory-index
order, so output bytes do not depend on how many workers ran the pool.
"""

from __future__ import annotations

import hashlib
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .bandit_core import Arm, BanditInstance, GaussianPrior
from .langevin import SamplerKind
from .schedule import ScheduleConstants
from .thompson import TrajectoryConfig, run_trajectory

DEFAULT_NOISE_VAR = 1.0
MIN_GAP = 0.2
DEFAULT_RESAMPLES = 2000


class ConfigError(ValueError):
    """Raised for malformed scenario configuration."""


@dataclass(frozen=True)
class Variant:
    """One labelled sampler setting inside a scenario."""

    label: str
    kind: SamplerKind
    gamma: float = 2.0
    u: Union[float, str] = "auto"
    step_h: Optional[float] = None
    steps_i: Optional[int] = None
    batch_k: Optional[int] = None
    rho_mode: Union[float, str] = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """A full experiment: instance geometry, variants, trajectory budget."""

    name: str
    dim: int
    arms: int
    horizon: int
    trajectories: int
    seed: int
    instance_seed: int
    samplers: Tuple[str, ...]
    gamma: Tuple[float, ...] = (2.0,)
    u: Union[float, str] = "auto"
    step_h: Optional[float] = None
    steps_i: Optional[int] = None
    batch_k: Optional[int] = None
    rho_mode: Union[float, str] = 1.0
    prior_mean: float = 0.0
    prior_var: float = 1.0
    schedule: ScheduleConstants = field(default_factory=ScheduleConstants)
    advance_unplayed: bool = True
    variants: Tuple[Variant, ...] = ()
    bootstrap_resamples: int = DEFAULT_RESAMPLES

    def __post_init__(self):
        if self.trajectories < 1:
            raise ConfigError("trajectories must be at least 1")
        if self.horizon < 0:
            raise ConfigError("horizon must be nonnegative")
        if self.dim < 1 or self.arms < 1:
            raise ConfigError("dim and arms must be positive")
        if not self.variants and not self.samplers:
            raise ConfigError("at least one sampler is required")
        for s in self.samplers:
            try:
                SamplerKind(s)
            except ValueError:
                valid = ", ".join(k.value for k in SamplerKind)
                raise ConfigError(f"unknown sampler '{s}' (valid: {valid})") from None

    def resolved_variants(self) -> Tuple[Variant, ...]:
        if self.variants:
            return self.variants
        out = []
        for s in self.samplers:
            for g in self.gamma:
                label = s if len(self.gamma) == 1 else f"{s}[gamma={g:g}]"
                out.append(
                    Variant(
                        label=label,
                        kind=SamplerKind(s),
                        gamma=g,
                        u=self.u,
                        step_h=self.step_h,
                        steps_i=self.steps_i,
                        batch_k=self.batch_k,
                        rho_mode=self.rho_mode,
                    )
                )
        return tuple(out)

    def digest(self) -> str:
        text = repr(
            (
                self.name, self.dim, self.arms, self.horizon, self.trajectories,
                self.seed, self.instance_seed, self.samplers, self.gamma,
                self.u, self.step_h, self.steps_i, self.batch_k, self.rho_mode,
                self.prior_mean, self.prior_var,
                (self.schedule.c_h, self.schedule.c_i, self.schedule.c_k,
                 self.schedule.n_dependent_h),
                self.advance_unplayed, self.variants, self.bootstrap_resamples,
            )
        )
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class AggregateCurve:
    """Mean cumulative regret per round with a 95% bootstrap band."""

    label: str
    mean_regret: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    config_hash: str


def make_instance(
    dim: int,
    arms: int,
    instance_seed: int,
    noise_var: float = DEFAULT_NOISE_VAR,
    min_gap: float = MIN_GAP,
) -> BanditInstance:
    """Generate a fixed synthetic instance from its own seed.

    Features are uniform on the unit sphere, true parameters standard
    normal. The best arm is nudged along its own feature so every
    suboptimal gap is at least ``min_gap``, keeping logarithmic-regret
    signatures detectable at modest trajectory counts.
    """
    rng = np.random.default_rng(instance_seed)
    feats = rng.standard_normal((arms, dim))
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    params = rng.standard_normal((arms, dim))
    scores = np.einsum("ad,ad->a", feats, params)
    best = int(np.argmax(scores))
    others = np.delete(scores, best)
    if others.size:
        needed = float(others.max()) + min_gap - float(scores[best])
        if needed > 0.0:
            params[best] += feats[best] * needed / float(feats[best] @ feats[best])
    arm_objs = tuple(
        Arm(feature=feats[a], true_param=params[a], reward_noise_var=noise_var)
        for a in range(arms)
    )
    return BanditInstance(arms=arm_objs)


def bootstrap_ci(
    values: Sequence[float],
    resamples: int,
    level: float = 0.95,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float]:
    """Percentile bootstrap interval for the mean of ``values``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("bootstrap needs at least one value")
    if resamples < 1:
        raise ValueError("resamples must be at least 1")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if rng is None:
        rng = np.random.default_rng(0)
    idx = rng.integers(0, values.size, size=(resamples, values.size))
    means = values[idx].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    low, high = np.percentile(means, [tail, 100.0 - tail])
    return float(low), float(high)


def _trajectory_task(payload) -> np.ndarray:
    config, seed = payload
    try:
        return run_trajectory(config, seed).regret_series()
    except Exception as exc:
        raise RuntimeError(f"trajectory with seed {seed} failed: {exc}") from exc


def _variant_trajectory_config(config: ScenarioConfig, variant: Variant) -> TrajectoryConfig:
    instance = make_instance(config.dim, config.arms, config.instance_seed)
    prior = GaussianPrior(
        mean=np.full(config.dim, config.prior_mean), var=config.prior_var
    )
    return TrajectoryConfig(
        instance=instance,
        prior=prior,
        kind=variant.kind,
        horizon=config.horizon,
        gamma=variant.gamma,
        u=variant.u,
        step_h=variant.step_h,
        steps_i=variant.steps_i,
        batch_k=variant.batch_k,
        rho_mode=variant.rho_mode,
        schedule=config.schedule,
        advance_unplayed=config.advance_unplayed,
    )


def run_scenario(config: ScenarioConfig, workers: int = 1) -> List[AggregateCurve]:
    """Run every variant's trajectories and aggregate regret curves.

    Trajectory i of every variant uses seed ``config.seed + i``. Results are
    folded in index order regardless of worker scheduling, so the output is
    a pure function of the configuration.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    variants = config.resolved_variants()
    tasks = []
    for variant in variants:
        tconf = _variant_trajectory_config(config, variant)
        for i in range(config.trajectories):
            tasks.append((tconf, config.seed + i))

    if workers == 1 or len(tasks) == 1:
        series = [_trajectory_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (4 * workers))
            series = list(pool.map(_trajectory_task, tasks, chunksize=chunk))

    digest = config.digest()
    curves = []
    for vi, variant in enumerate(variants):
        block = series[vi * config.trajectories : (vi + 1) * config.trajectories]
        matrix = np.vstack(block) if config.horizon > 0 else np.zeros(
            (config.trajectories, 0)
        )
        mean = matrix.mean(axis=0)
        low = np.empty_like(mean)
        high = np.empty_like(mean)
        boot_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(7919, vi))
        )
        for r in range(matrix.shape[1]):
            low[r], high[r] = bootstrap_ci(
                matrix[:, r], config.bootstrap_resamples, 0.95, boot_rng
            )
        curves.append(
            AggregateCurve(
                label=variant.label,
                mean_regret=mean,
                ci_low=low,
                ci_high=high,
                config_hash=digest,
            )
        )
    return curves


def emit_csv(curves: Sequence[AggregateCurve], path) -> None:
    """Write curves as ``sampler,round,mean_regret,ci_low,ci_high`` rows.

    Rows are ordered by (sampler label, round); floats carry 17 significant
    digits so parsing the file back reproduces them exactly.
    """
    rows = []
    for curve in curves:
        for r in range(curve.mean_regret.shape[0]):
            rows.append(
                (
                    curve.label,
                    r + 1,
                    curve.mean_regret[r],
                    curve.ci_low[r],
                    curve.ci_high[r],
                )
            )
    rows.sort(key=lambda row: (row[0], row[1]))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("sampler,round,mean_regret,ci_low,ci_high\n")
            for label, rnd, mean, low, high in rows:
                fh.write(f"{label},{rnd},{mean:.17g},{low:.17g},{high:.17g}\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> List[dict]:
    """Parse a file produced by emit_csv back into row dictionaries."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "sampler,round,mean_regret,ci_low,ci_high":
            raise ValueError(f"unexpected header in {path}: {header}")
        for line in fh:
            label, rnd, mean, low, high = line.rstrip("\n").split(",")
            out.append(
                {
                    "sampler": label,
                    "round": int(rnd),
                    "mean_regret": float(mean),
                    "ci_low": float(low),
                    "ci_high": float(high),
                }
            )
    return out


# ---------------------------------------------------------------------------
# Configuration files
# ---------------------------------------------------------------------------

_TOP_KEYS = {
    "dim", "arms", "horizon", "trajectories", "seed", "instance_seed",
    "samplers", "gamma", "u", "step_h", "steps_i", "batch_k", "rho_mode",
    "prior", "schedule", "advance_unplayed",
}
_REQUIRED = ("dim", "arms", "horizon", "trajectories", "seed", "instance_seed", "samplers")


def parse_scenario(data: dict, name: str) -> ScenarioConfig:
    """Validate a parsed configuration mapping into a ScenarioConfig."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")

    samplers = data["samplers"]
    if not isinstance(samplers, list) or not all(isinstance(s, str) for s in samplers):
        raise ConfigError("samplers must be a list of sampler names")

    gamma = data.get("gamma", 2.0)
    gammas = tuple(float(g) for g in gamma) if isinstance(gamma, list) else (float(gamma),)

    u = data.get("u", "auto")
    if isinstance(u, str) and u != "auto":
        raise ConfigError("u must be a number or 'auto'")

    rho_mode = data.get("rho_mode", 1.0)
    if isinstance(rho_mode, str) and rho_mode not in ("exact", "approx"):
        raise ConfigError("rho_mode must be 'exact', 'approx' or a number")
    if not isinstance(rho_mode, str):
        rho_mode = float(rho_mode)

    prior = data.get("prior", {})
    if not isinstance(prior, dict) or set(prior) - {"mean", "var"}:
        raise ConfigError("prior must be a table with keys mean, var")

    sched_data = data.get("schedule", {})
    if not isinstance(sched_data, dict) or set(sched_data) - {
        "c_h", "c_i", "c_k", "n_dependent_h"
    }:
        raise ConfigError("schedule accepts keys c_h, c_i, c_k, n_dependent_h")
    schedule = ScheduleConstants(
        c_h=float(sched_data.get("c_h", 0.3)),
        c_i=float(sched_data.get("c_i", 3.0)),
        c_k=float(sched_data.get("c_k", 1.0)),
        n_dependent_h=bool(sched_data.get("n_dependent_h", False)),
    )

    def opt_float(key):
        return float(data[key]) if key in data else None

    def opt_int(key):
        return int(data[key]) if key in data else None

    try:
        return ScenarioConfig(
            name=name,
            dim=int(data["dim"]),
            arms=int(data["arms"]),
            horizon=int(data["horizon"]),
            trajectories=int(data["trajectories"]),
            seed=int(data["seed"]),
            instance_seed=int(data["instance_seed"]),
            samplers=tuple(samplers),
            gamma=gammas,
            u=u if isinstance(u, str) else float(u),
            step_h=opt_float("step_h"),
            steps_i=opt_int("steps_i"),
            batch_k=opt_int("batch_k"),
            rho_mode=rho_mode,
            prior_mean=float(prior.get("mean", 0.0)),
            prior_var=float(prior.get("var", 1.0)),
            schedule=schedule,
            advance_unplayed=bool(data.get("advance_unplayed", True)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path) -> ScenarioConfig:
    """Load a TOML scenario file; the scenario is named after the file."""
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_scenario(data, name)


# ---------------------------------------------------------------------------
# Built-in presets mirroring the six regret experiment families
# ---------------------------------------------------------------------------

PRESET_NAMES = ("fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "fig1f")


def preset_scenarios(
    name: str,
    trajectories: Optional[int] = None,
    horizon: Optional[int] = None,
    full: bool = False,
) -> List[ScenarioConfig]:
    """Built-in scenario families at desk scale.

    fig1a  same step size / step count comparison of all four samplers
    fig1b  kinetic sqrt(d) step budget vs overdamped at equal and at
           linear-in-d budgets (d = 100)
    fig1c  friction sweep gamma in {0.1, 1, 2, 5, 10}
    fig1d  flat (uninformative) prior
    fig1e  dimension sweep for the kinetic sampler
    fig1f  high-dimension head-to-head

    ``full`` switches to the 500-trajectory / high-dimension grids.
    """
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset '{name}' (valid: {', '.join(PRESET_NAMES)})")
    m_default = 500 if full else 100
    base = dict(
        horizon=horizon if horizon is not None else 1000,
        seed=20240801,
        prior_mean=0.0,
        prior_var=1.0,
        rho_mode=1.0,
        u="auto",
    )

    def mk(**kw):
        kw.setdefault("trajectories", trajectories if trajectories is not None else m_default)
        merged = {**base, **kw}
        return ScenarioConfig(**merged)

    if name == "fig1a":
        return [
            mk(
                name="fig1a",
                dim=10,
                arms=10,
                instance_seed=7019,
                samplers=("ulmc_full", "ulmc_stoch", "olmc_full", "olmc_stoch"),
                schedule=ScheduleConstants(c_h=0.45, c_i=3.0, c_k=1.25),
            )
        ]

    if name == "fig1b":
        m = trajectories if trajectories is not None else (500 if full else 30)
        sched = ScheduleConstants(c_h=0.45, c_i=1.0)
        common = dict(dim=100, arms=10, instance_seed=7019, trajectories=m)
        return [
            mk(
                name="fig1b_ulmc_sqrtd",
                samplers=("ulmc_full",),
                schedule=sched,
                **common,
            ),
            mk(
                name="fig1b_olmc_matched",
                samplers=("olmc_full",),
                schedule=sched,
                **common,
            ),
            mk(
                name="fig1b_olmc_lineard",
                samplers=("olmc_full",),
                step_h=1e-3,
                steps_i=100,
                **common,
            ),
        ]

    if name == "fig1c":
        return [
            mk(
                name="fig1c",
                dim=10,
                arms=10,
                instance_seed=7019,
                samplers=("ulmc_full",),
                gamma=(0.1, 1.0, 2.0, 5.0, 10.0),
                schedule=ScheduleConstants(c_h=0.45, c_i=3.0),
            )
        ]

    if name == "fig1d":
        return [
            mk(
                name="fig1d",
                dim=10,
                arms=10,
                instance_seed=7019,
                samplers=("ulmc_full", "olmc_full"),
                prior_var=1e6,
                schedule=ScheduleConstants(c_h=0.45, c_i=3.0),
            )
        ]

    if name == "fig1e":
        dims = (10, 30, 100, 300, 1000) if full else (10, 30, 100)
        m = trajectories if trajectories is not None else (500 if full else 50)
        return [
            mk(
                name=f"fig1e_d{d}",
                dim=d,
                arms=10,
                instance_seed=7005 + d,
                samplers=("ulmc_full",),
                schedule=ScheduleConstants(c_h=0.45, c_i=3.0),
                trajectories=m,
            )
            for d in dims
        ]

    # fig1f
    d = 1000 if full else 100
    m = trajectories if trajectories is not None else (500 if full else 30)
    return [
        mk(
            name=f"fig1f_ulmc_d{d}",
            dim=d,
            arms=10,
            instance_seed=7019,
            samplers=("ulmc_full",),
            schedule=ScheduleConstants(c_h=0.45, c_i=1.0),
            trajectories=m,
        ),
        mk(
            name=f"fig1f_olmc_d{d}",
            dim=d,
            arms=10,
            instance_seed=7019,
            samplers=("olmc_full",),
            step_h=1e-3,
            steps_i=d,
            trajectories=m,
        ),
    ]
