"""Task- and interactive-intention trackers.

The task level runs a mutable-intention particle filter at the observation
rate: particles carry intention hypotheses, mutate through the stay/switch
transition each stride, and are reweighted by the goal-seeking stride
likelihood of the newly observed wrist positions. The interactive level is
an exact two-state filter whose cooperation evidence scores motion toward a
region following the robot end-effector and whose coexistence evidence
mixes the task-goal likelihoods through the conditional link row.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .filtering import (
    COEXIST,
    COOPERATE,
    FilterConfig,
    IntentionSpace,
    LinkDistribution,
    Posterior,
    TransitionModel,
    hierarchical_likelihood,
    link_distribution,
    predict,
    transition_matrix,
    update,
)
from .motion import (
    GilmParams,
    GoalRegion,
    ObservationWindow,
    estimate_speed,
    fr_goal_region,
    gilm_log_likelihood,
    gilm_step,
    _step_cov_increment,
)

log = logging.getLogger(__name__)

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class Particle:
    intention: str
    weight: float


@dataclass
class ParticleSet:
    """Weighted intention hypotheses, stored as parallel arrays."""

    space: IntentionSpace
    intents: np.ndarray  # (N,) int64 indices into space.labels
    weights: np.ndarray  # (N,) nonnegative, summing to 1
    rng: np.random.Generator

    def __post_init__(self):
        self.intents = np.asarray(self.intents, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.intents.shape != self.weights.shape:
            raise ValueError("intents and weights must align")

    @property
    def n(self) -> int:
        return len(self.intents)

    @property
    def particles(self) -> list[Particle]:
        return [
            Particle(self.space.labels[i], float(w))
            for i, w in zip(self.intents, self.weights)
        ]

    @classmethod
    def uniform(cls, space: IntentionSpace, n: int, rng: np.random.Generator) -> "ParticleSet":
        intents = np.arange(n, dtype=np.int64) % space.m
        return cls(space, intents, np.full(n, 1.0 / n), rng)

    def reset_uniform(self):
        self.intents = np.arange(self.n, dtype=np.int64) % self.space.m
        self.weights = np.full(self.n, 1.0 / self.n)


@dataclass(frozen=True)
class MifConfig:
    """Particle-tracker knobs: stride geometry, motion model, resampling."""

    filt: FilterConfig
    gilm: GilmParams
    n_particles: int
    resample_frac: float = 0.5


def mif_posterior(ps: ParticleSet) -> Posterior:
    """Per-intention sum of particle weights."""
    sums = kernels.intent_sums(ps.weights, ps.intents, ps.space.m)
    total = float(np.sum(sums))
    if total <= 0:
        raise ValueError("particle set has zero total weight")
    return Posterior(ps.space, sums / total)


def mif_step(
    ps: ParticleSet,
    window: ObservationWindow,
    goals: dict[str, GoalRegion],
    cfg: MifConfig,
) -> tuple[ParticleSet, Posterior]:
    """One stride: mutate intentions, weight by stride likelihood of the
    window's newest observations, normalize, and resample when the
    effective sample size halves. Zero total weight resets to uniform."""
    space = ps.space
    logliks = np.array(
        [
            gilm_log_likelihood(window, goals[label], cfg.filt.horizon, cfg.gilm)
            for label in space.labels
        ]
    )
    # Shift in log space: weights only matter up to a positive scale.
    liks = np.exp(logliks - logliks.max())

    u = ps.rng.random(ps.n)
    intents = kernels.mutate_intents(ps.intents, u, cfg.filt.stay_prob, space.m)
    weights = kernels.reweight(ps.weights, intents, liks)

    total = float(np.sum(weights))
    if total <= 0.0 or not np.isfinite(total):
        log.warning("particle weights degenerate; resetting to uniform")
        out = ParticleSet.uniform(space, ps.n, ps.rng)
        return out, mif_posterior(out)
    weights = weights / total

    posterior = Posterior(space, kernels.intent_sums(weights, intents, space.m))

    ess = 1.0 / float(np.dot(weights, weights))
    if ess < cfg.resample_frac * ps.n:
        idx = kernels.systematic_resample(weights, float(ps.rng.random()))
        intents = intents[idx]
        weights = np.full(ps.n, 1.0 / ps.n)

    return ParticleSet(space, intents, weights, ps.rng), posterior


class LowLevelTracker:
    """Streams observations at the camera rate and strides the particle
    filter every `horizon` samples. Holds the latest posterior between
    strides and exposes the prediction-step output for the upper level."""

    def __init__(
        self,
        cfg: MifConfig,
        task_goals: dict[str, GoalRegion],
        fr_cov: np.ndarray,
        rng: np.random.Generator,
    ):
        self.cfg = cfg
        self.space = IntentionSpace.task()
        self.task_goals = dict(task_goals)
        self.fr_cov = np.asarray(fr_cov, dtype=float)
        self.transition = transition_matrix(self.space.m, cfg.filt.stay_prob)
        self.particles = ParticleSet.uniform(self.space, cfg.n_particles, rng)
        self.posterior = Posterior.uniform(self.space)
        maxlen = max(cfg.gilm.speed_window, 2) + cfg.filt.horizon + 2
        self._t = deque(maxlen=maxlen)
        self._wrist = deque(maxlen=maxlen)
        self._ee = deque(maxlen=maxlen)
        self._new = 0

    @property
    def predicted(self) -> Posterior:
        """Prediction-step output at the current stride."""
        return predict(self.posterior, self.transition)

    def ingest(self, t: float, wrist: np.ndarray, ee: np.ndarray) -> bool:
        """Feed one smoothed observation; returns True when a stride ran."""
        self._t.append(float(t))
        self._wrist.append(np.asarray(wrist, dtype=float))
        self._ee.append(np.asarray(ee, dtype=float))
        self._new += 1
        h = self.cfg.filt.horizon
        if self._new < h or len(self._t) < h + 2:
            return False
        window = ObservationWindow(
            np.array(self._t), np.array(self._wrist), np.array(self._ee)
        )
        goals = dict(self.task_goals)
        goals[self.space.labels[-1]] = fr_goal_region(self._ee[-1], self.fr_cov)
        self.particles, self.posterior = mif_step(self.particles, window, goals, self.cfg)
        self._new = 0
        return True


@dataclass(frozen=True)
class HighLevelConfig:
    """Interactive-tracker knobs: stride geometry at the slow rate, motion
    model (goal spread folded in), and the fast-tick subsampling factor."""

    filt: FilterConfig
    gilm: GilmParams
    every: int  # fast ticks per stride


@dataclass
class HighLevelState:
    posterior: Posterior
    task_goals: dict[str, GoalRegion]
    fr_cov: np.ndarray
    link: LinkDistribution | None = None


def _gaussian2_logpdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    r = x - mean
    quad = (cov[1, 1] * r[0] ** 2 - 2.0 * cov[0, 1] * r[0] * r[1] + cov[0, 0] * r[1] ** 2) / det
    return -_LOG_2PI - 0.5 * float(np.log(det)) - 0.5 * quad


def high_level_step(
    state: HighLevelState,
    window: ObservationWindow,
    low_predicted: Posterior,
    cfg: HighLevelConfig,
) -> Posterior:
    """One interactive-intention stride.

    The stride compares the wrist displacement over the slow step against
    two hypotheses: motion toward the region following the robot
    (cooperation) and motion toward the task goals weighted by the
    coexistence link row built from the concurrent task-level prediction.
    """
    task_space = low_predicted.space
    if len(window) < cfg.every + 2:
        raise ValueError("window too short for an interactive stride")

    context = ObservationWindow(
        window.timestamps[: -cfg.every],
        window.wrist[: -cfg.every],
        window.robot_ee[: -cfg.every],
    )
    speed = estimate_speed(context, cfg.gilm)
    x_prev = window.wrist[-cfg.every - 1]
    x_new = window.wrist[-1]
    ee = window.robot_ee[-1]
    dt_slow = cfg.filt.dt

    goals = dict(state.task_goals)
    goals[task_space.labels[-1]] = fr_goal_region(ee, state.fr_cov)

    logliks = np.empty(task_space.m)
    for i, label in enumerate(task_space.labels):
        goal = goals[label]
        mean = gilm_step(x_prev, goal, speed, dt_slow)
        cov = _step_cov_increment(goal, cfg.gilm)
        logliks[i] = _gaussian2_logpdf(x_new, mean, cov)

    link = link_distribution(low_predicted)
    state.link = link
    liks = np.exp(logliks - logliks.max())

    high_space = state.posterior.space
    evidence = np.empty(2)
    evidence[high_space.index(COEXIST)] = hierarchical_likelihood(liks, link.row(COEXIST))
    evidence[high_space.index(COOPERATE)] = hierarchical_likelihood(liks, link.row(COOPERATE))

    model = transition_matrix(2, cfg.filt.stay_prob)
    state.posterior = update(predict(state.posterior, model), evidence)
    return state.posterior


class HighLevelTracker:
    """Streams fast-rate observations and strides the interactive filter
    every `every` ticks using the freshest task-level prediction output."""

    def __init__(
        self,
        cfg: HighLevelConfig,
        task_goals: dict[str, GoalRegion],
        fr_cov: np.ndarray,
        prior: Posterior | None = None,
    ):
        self.cfg = cfg
        self.state = HighLevelState(
            prior if prior is not None else Posterior.uniform(IntentionSpace.interactive()),
            dict(task_goals),
            np.asarray(fr_cov, dtype=float),
        )
        maxlen = max(cfg.gilm.speed_window, 2) + cfg.every + 2
        self._t = deque(maxlen=maxlen)
        self._wrist = deque(maxlen=maxlen)
        self._ee = deque(maxlen=maxlen)
        self._new = 0

    @property
    def posterior(self) -> Posterior:
        return self.state.posterior

    def ingest(self, t: float, wrist: np.ndarray, ee: np.ndarray, low_predicted: Posterior) -> bool:
        self._t.append(float(t))
        self._wrist.append(np.asarray(wrist, dtype=float))
        self._ee.append(np.asarray(ee, dtype=float))
        self._new += 1
        if self._new < self.cfg.every or len(self._t) < self.cfg.every + 2:
            return False
        window = ObservationWindow(
            np.array(self._t), np.array(self._wrist), np.array(self._ee)
        )
        high_level_step(self.state, window, low_predicted, self.cfg)
        self._new = 0
        return True


class TrackerStack:
    """Both levels wired to one smoothed observation stream.

    The task level strides every `horizon` ticks, the interactive level
    every `every` ticks; the interactive stride always reads the task
    level's most recent prediction-step output, which the stride cadence
    keeps fresher than one slow period.
    """

    def __init__(self, low: LowLevelTracker, high: HighLevelTracker):
        self.low = low
        self.high = high

    def ingest(self, t: float, wrist: np.ndarray, ee: np.ndarray) -> None:
        self.low.ingest(t, wrist, ee)
        self.high.ingest(t, wrist, ee, self.low.predicted)

    @property
    def task_posterior(self) -> Posterior:
        return self.low.posterior

    @property
    def interactive_posterior(self) -> Posterior:
        return self.high.posterior
