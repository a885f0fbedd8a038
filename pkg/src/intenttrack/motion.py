"""Intention-conditioned wrist motion model.

The model is a constant-speed linear pull toward a Gaussian goal region:
each step moves the estimated speed times dt along the unit vector to the
goal mean, plus Gaussian process noise. Rolling the model forward yields a
Gaussian per step whose covariance accumulates the per-step noise (and,
optionally, the goal region's own spread); stride evidence is the joint
density of the newly observed positions under that rollout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels

GOAL_EPS = 1e-6  # m; below this distance the directed term vanishes
COV_REG = 1e-9  # m^2; ridge applied to singular step covariances


class GoalKind(enum.Enum):
    TASK = "static-task-goal"
    PREP = "preparation-area"
    FOLLOW_ROBOT = "follow-robot"


@dataclass(frozen=True)
class GoalRegion:
    """Gaussian region an intention points at."""

    mean: np.ndarray
    cov: np.ndarray
    kind: GoalKind = GoalKind.TASK

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))
        if self.mean.shape != (2,) or self.cov.shape != (2, 2):
            raise ValueError("goal region needs a 2-vector mean and 2x2 covariance")
        if not np.allclose(self.cov, self.cov.T, atol=1e-12):
            raise ValueError("goal covariance must be symmetric")
        if np.linalg.eigvalsh(self.cov).min() < -1e-12:
            raise ValueError("goal covariance must be positive semi-definite")


@dataclass(frozen=True)
class GilmParams:
    """Knobs of the goal-seeking model used for likelihood evaluation."""

    speed_window: int
    process_noise_cov: np.ndarray
    goal_backprop: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "process_noise_cov", np.asarray(self.process_noise_cov, dtype=float)
        )
        if self.speed_window < 2:
            raise ValueError(f"speed window must be >= 2, got {self.speed_window}")
        q = self.process_noise_cov
        if q.shape != (2, 2) or not np.allclose(q, q.T, atol=1e-12):
            raise ValueError("process noise must be a symmetric 2x2 covariance")
        if np.linalg.eigvalsh(q).min() < -1e-12:
            raise ValueError("process noise must be positive semi-definite")


@dataclass
class ObservationWindow:
    """Aligned streams of timestamps, wrist positions, and robot positions."""

    timestamps: np.ndarray
    wrist: np.ndarray
    robot_ee: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.wrist = np.asarray(self.wrist, dtype=float)
        self.robot_ee = np.asarray(self.robot_ee, dtype=float)
        n = len(self.timestamps)
        if self.wrist.shape != (n, 2) or self.robot_ee.shape != (n, 2):
            raise ValueError("wrist/robot streams must align with timestamps")
        if n >= 2 and np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def dt(self) -> float:
        if len(self) < 2:
            raise ValueError("need >= 2 samples to infer dt")
        return float(self.timestamps[1] - self.timestamps[0])


def estimate_speed(window: ObservationWindow, params: GilmParams) -> float:
    """Average wrist speed: mean per-step displacement over the most recent
    speed_window samples, divided by the step duration."""
    if len(window) < 2:
        raise ValueError("speed estimation needs >= 2 wrist samples")
    pts = window.wrist[-params.speed_window :]
    steps = np.diff(pts, axis=0)
    return float(np.linalg.norm(steps, axis=1).mean() / window.dt)


def gilm_step(
    x: np.ndarray,
    goal: GoalRegion,
    speed: float,
    dt: float,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """One motion step: speed*dt along the unit vector to the goal mean,
    plus the supplied noise sample. Degenerate when already at the goal."""
    if speed < 0:
        raise ValueError(f"speed must be nonnegative, got {speed}")
    x = np.asarray(x, dtype=float)
    delta = goal.mean - x
    dist = float(np.linalg.norm(delta))
    out = x.copy()
    if dist >= GOAL_EPS:
        out = out + (speed * dt / dist) * delta
    if noise is not None:
        out = out + np.asarray(noise, dtype=float)
    return out


def _step_cov_increment(goal: GoalRegion, params: GilmParams) -> np.ndarray:
    inc = params.process_noise_cov.copy()
    if params.goal_backprop:
        inc = inc + goal.cov
    det = inc[0, 0] * inc[1, 1] - inc[0, 1] * inc[1, 0]
    if det <= 1e-18:
        inc = inc + COV_REG * np.eye(2)
    return inc


def gilm_rollout(
    x: np.ndarray,
    goal: GoalRegion,
    speed: float,
    horizon: int,
    params: GilmParams,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Forward-propagate the model for `horizon` steps.

    Means iterate the noiseless step from the previous mean; covariances
    accumulate the per-step increment, starting from zero at the current
    position. Returns (means (H,2), covs (H,2,2)).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    means = kernels.rollout_means(
        np.asarray(x, dtype=float), goal.mean, speed * dt, horizon, GOAL_EPS
    )
    inc = _step_cov_increment(goal, params)
    covs = np.arange(1, horizon + 1)[:, None, None] * inc[None, :, :]
    return means, covs


def gilm_log_likelihood(
    window: ObservationWindow,
    goal: GoalRegion,
    horizon: int,
    params: GilmParams,
) -> float:
    """Log joint density of the window's last `horizon` wrist positions
    under the rollout anchored just before them."""
    if len(window) < horizon + 2:
        raise ValueError(
            f"window of {len(window)} samples cannot anchor a horizon-{horizon} stride"
        )
    context = ObservationWindow(
        window.timestamps[:-horizon], window.wrist[:-horizon], window.robot_ee[:-horizon]
    )
    speed = estimate_speed(context, params)
    x0 = window.wrist[-horizon - 1]
    obs = window.wrist[-horizon:]
    inc = _step_cov_increment(goal, params)
    return float(
        kernels.rollout_loglik(
            obs, x0, goal.mean, speed * window.dt, inc[0, 0], inc[0, 1], inc[1, 1], GOAL_EPS
        )
    )


def gilm_likelihood(
    window: ObservationWindow,
    goal: GoalRegion,
    horizon: int,
    params: GilmParams,
) -> float:
    """Linear-space stride density (may underflow to 0 for far-off goals;
    callers that compare goals should use gilm_log_likelihood)."""
    return math.exp(gilm_log_likelihood(window, goal, horizon, params))


def fr_goal_region(robot_ee: np.ndarray, radius_cov: np.ndarray) -> GoalRegion:
    """Recovery goal region: follows the robot end-effector at query time."""
    return GoalRegion(np.asarray(robot_ee, dtype=float), radius_cov, GoalKind.FOLLOW_ROBOT)
