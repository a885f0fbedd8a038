"""Recursive Bayesian filtering over discrete, evolving intentions.

A tracked intention is a Markov chain over a small label set. Filtering
advances in strides: one predict through a symmetric stay/switch transition
matrix, then one update against the likelihood of the states observed during
the stride. A two-level hierarchy is supported by expressing the upper
level's likelihood as a mixture of lower-level likelihoods through a
conditional link distribution.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateEvidenceError

log = logging.getLogger(__name__)

LEVEL_TASK = 1
LEVEL_INTERACTIVE = 2

RECOVER = "recover"
COEXIST = "coexist"
COOPERATE = "cooperate"

TASK_LABELS = ("part1", "part2", "part3", "part4", RECOVER)
INTERACTIVE_LABELS = (COEXIST, COOPERATE)

PROB_ATOL = 1e-9


@dataclass(frozen=True)
class IntentionSpace:
    """Ordered label set for one level of the intention hierarchy."""

    level: int
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"intention space needs >= 2 labels, got {self.m}")
        if len(set(self.labels)) != self.m:
            raise ValueError(f"duplicate labels: {self.labels}")
        if self.level == LEVEL_TASK and RECOVER not in self.labels:
            raise ValueError("task-level space must include the recovery intention")
        if self.level == LEVEL_INTERACTIVE and set(self.labels) != {COEXIST, COOPERATE}:
            raise ValueError("interactive-level space must be {coexist, cooperate}")
        if self.level not in (LEVEL_TASK, LEVEL_INTERACTIVE):
            raise ValueError(f"unsupported level {self.level}")

    @property
    def m(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @classmethod
    def task(cls) -> "IntentionSpace":
        return cls(LEVEL_TASK, TASK_LABELS)

    @classmethod
    def interactive(cls) -> "IntentionSpace":
        return cls(LEVEL_INTERACTIVE, INTERACTIVE_LABELS)


@dataclass(frozen=True)
class TransitionModel:
    """Symmetric stay/switch intention dynamics: diagonal stay probability,
    remaining mass spread evenly over the other intentions."""

    m: int
    stay_prob: float
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        rows = self.matrix.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-12):
            raise ValueError("transition rows must sum to 1")


def transition_matrix(m: int, stay_prob: float) -> TransitionModel:
    """Build the stay/switch transition model.

    Raises ValueError for m < 2 or stay_prob outside [0, 1].
    """
    if m < 2:
        raise ValueError(f"need at least 2 intentions, got m={m}")
    if not (0.0 <= stay_prob <= 1.0) or not math.isfinite(stay_prob):
        raise ValueError(f"stay probability must be in [0, 1], got {stay_prob}")
    switch = (1.0 - stay_prob) / (m - 1)
    mat = np.full((m, m), switch)
    np.fill_diagonal(mat, stay_prob)
    return TransitionModel(m=m, stay_prob=stay_prob, matrix=mat)


@dataclass
class Posterior:
    """Probability vector over an intention space at one stride."""

    space: IntentionSpace
    probs: np.ndarray
    step: int = 0

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        self.validate()

    def validate(self):
        if self.probs.shape != (self.space.m,):
            raise ValueError(
                f"posterior length {self.probs.shape} does not match m={self.space.m}"
            )
        if not np.all(np.isfinite(self.probs)) or np.any(self.probs < 0):
            raise ValueError("posterior entries must be finite and nonnegative")
        total = float(self.probs.sum())
        if abs(total - 1.0) > PROB_ATOL:
            raise ValueError(f"posterior must sum to 1 (got {total})")

    def prob(self, label: str) -> float:
        return float(self.probs[self.space.index(label)])

    @classmethod
    def uniform(cls, space: IntentionSpace, step: int = 0) -> "Posterior":
        return cls(space, np.full(space.m, 1.0 / space.m), step)


@dataclass(frozen=True)
class FilterConfig:
    """Stride geometry of one filtering level: horizon steps per stride,
    step duration, and the per-stride stay probability."""

    horizon: int
    dt: float
    stay_prob: float

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def stride_duration(self) -> float:
        return self.horizon * self.dt


def predict(prior: Posterior, model: TransitionModel) -> Posterior:
    """One stride of intention dynamics: probs' = T^t probs."""
    if model.m != prior.space.m:
        raise ValueError(f"transition m={model.m} vs space m={prior.space.m}")
    return Posterior(prior.space, model.matrix.T @ prior.probs, prior.step)


def update(predicted: Posterior, likelihoods: Sequence[float]) -> Posterior:
    """Condition on stride evidence: probs' proportional to lik * predicted."""
    lik = np.asarray(likelihoods, dtype=float)
    if lik.shape != (predicted.space.m,):
        raise ValueError(f"likelihood length {lik.shape} vs m={predicted.space.m}")
    if not np.all(np.isfinite(lik)) or np.any(lik < 0):
        raise ValueError("likelihoods must be finite and nonnegative")
    unnorm = lik * predicted.probs
    total = float(unnorm.sum())
    if total <= 0.0:
        raise DegenerateEvidenceError("all-zero likelihood across intentions")
    return Posterior(predicted.space, unnorm / total, predicted.step + 1)


def map_intention(posterior: Posterior) -> str:
    """Most likely intention; ties resolve to the lowest label index."""
    if not np.all(np.isfinite(posterior.probs)):
        raise ValueError("posterior has non-finite entries")
    return posterior.space.labels[int(np.argmax(posterior.probs))]


def trajectory_likelihood(
    new_states: np.ndarray,
    step_density: Callable[[int, np.ndarray], float],
    horizon: int,
) -> float:
    """Stride evidence for one intention: product over the horizon of
    per-step conditional densities of the newly observed human states.

    ``step_density(tau, x)`` scores the tau'th new state (tau is 1-based);
    the robot's contribution cancels because its motion is a deterministic
    function of the observed history. Accumulated in log space.
    """
    new_states = np.asarray(new_states, dtype=float)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if len(new_states) < horizon:
        raise ValueError(
            f"horizon {horizon} exceeds the {len(new_states)} available observations"
        )
    total = 0.0
    for tau in range(1, horizon + 1):
        d = float(step_density(tau, new_states[tau - 1]))
        if not math.isfinite(d) or d < 0:
            raise ValueError(f"step density at tau={tau} is invalid: {d}")
        if d == 0.0:
            return 0.0
        total += math.log(d)
    return math.exp(total)


def hierarchical_likelihood(low_likelihoods: Sequence[float], link_row: Sequence[float]) -> float:
    """Upper-level stride evidence: mixture of lower-level likelihoods
    weighted by the conditional link row."""
    lik = np.asarray(low_likelihoods, dtype=float)
    row = np.asarray(link_row, dtype=float)
    if lik.shape != row.shape:
        raise ValueError(f"shape mismatch: likelihoods {lik.shape} vs link row {row.shape}")
    return float(lik @ row)


@dataclass(frozen=True)
class LinkDistribution:
    """Conditional distribution of the task intention given each
    interactive intention, evaluated at the current stride."""

    high_space: IntentionSpace
    low_space: IntentionSpace
    rows: np.ndarray  # (m_high, m_low), each row sums to 1

    def row(self, high_label: str) -> np.ndarray:
        return self.rows[self.high_space.index(high_label)]


def link_distribution(low_predicted: Posterior) -> LinkDistribution:
    """Conditional link between levels.

    Cooperation pins the task intention to recovery (a point mass); under
    coexistence the recovery intention is excluded and the prediction-step
    distribution over the remaining task goals is renormalized. If the task
    goals carry no mass, fall back to uniform over them (logged: a dead
    coexistence row would stall the upper filter).
    """
    low_space = low_predicted.space
    if low_space.level != LEVEL_TASK:
        raise ValueError("link distribution expects a task-level posterior")
    high_space = IntentionSpace.interactive()
    ri = low_space.index(RECOVER)

    co_row = np.zeros(low_space.m)
    co_row[ri] = 1.0

    ce_row = low_predicted.probs.copy()
    ce_row[ri] = 0.0
    total = ce_row.sum()
    if total <= 0.0:
        log.warning("coexistence link row degenerate (all mass on recovery); using uniform")
        ce_row[:] = 1.0 / (low_space.m - 1)
        ce_row[ri] = 0.0
    else:
        ce_row /= total

    rows = np.empty((2, low_space.m))
    rows[high_space.index(COEXIST)] = ce_row
    rows[high_space.index(COOPERATE)] = co_row
    return LinkDistribution(high_space, low_space, rows)
