"""Synthetic wrist-trajectory scenarios for tracker calibration and tests.

Each builder returns a stream of true wrist positions with a matching robot
trace. Streams are deterministic per seed and carry the index where the
scripted behavior changes, so timing claims (convergence, switch latency)
can be measured against a known onset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import ScenarioConfig
from .world import Workspace


@dataclass
class SyntheticStream:
    timestamps: np.ndarray
    wrist: np.ndarray
    ee: np.ndarray
    onset: Optional[int]  # tick index where the scripted change happens
    target: Optional[str]


def _walk(start, toward, steps, speed, dt, rng, sigma, stop_at=0.0):
    pts = []
    x = np.asarray(start, dtype=float).copy()
    for _ in range(steps):
        d = np.asarray(toward, dtype=float) - x
        dist = float(np.linalg.norm(d))
        if dist > stop_at and dist > 1e-9:
            x = x + d / dist * min(speed * dt, dist - stop_at)
        x = x + rng.normal(0.0, sigma, size=2)
        pts.append(x.copy())
    return pts, x


def straight_to_goal(
    cfg: ScenarioConfig, seed: int, part: str = "part2", seconds: float = 6.0
) -> SyntheticStream:
    """Wrist heads from the preparation strip straight at one part region
    and dwells there; the robot stays parked at home."""
    rng = np.random.default_rng(seed)
    ws = Workspace.from_config(cfg.workspace)
    dt = cfg.tracker.dt
    n = int(round(seconds / dt))
    pts, _ = _walk(ws.prep_center, ws.regions[part], n, cfg.human.speed, dt, rng,
                   cfg.human.motion_sigma)
    wrist = np.asarray(pts)
    ee = np.tile(ws.home, (n, 1))
    return SyntheticStream(dt * np.arange(1, n + 1), wrist, ee, None, part)


def intention_switch(
    cfg: ScenarioConfig,
    seed: int,
    first: str = "part2",
    second: str = "part4",
    switch_after: float = 3.0,
    seconds: float = 7.0,
) -> SyntheticStream:
    """Wrist pursues one region, then switches target mid-stream."""
    rng = np.random.default_rng(seed)
    ws = Workspace.from_config(cfg.workspace)
    dt = cfg.tracker.dt
    n1 = int(round(switch_after / dt))
    n2 = int(round(seconds / dt)) - n1
    pts1, x = _walk(ws.prep_center, ws.regions[first], n1, cfg.human.speed, dt, rng,
                    cfg.human.motion_sigma)
    pts2, _ = _walk(x, ws.regions[second], n2, cfg.human.speed, dt, rng,
                    cfg.human.motion_sigma)
    wrist = np.asarray(pts1 + pts2)
    n = len(wrist)
    ee = np.tile(ws.home, (n, 1))
    return SyntheticStream(dt * np.arange(1, n + 1), wrist, ee, n1, second)


def approach_robot(
    cfg: ScenarioConfig,
    seed: int,
    task_part: str = "part3",
    task_seconds: float = 2.0,
    approach_seconds: float = 2.5,
) -> SyntheticStream:
    """Task-directed motion, then a straight reach for the (parked) robot:
    the scripted trigger for the cooperation switch."""
    rng = np.random.default_rng(seed)
    ws = Workspace.from_config(cfg.workspace)
    dt = cfg.tracker.dt
    n1 = int(round(task_seconds / dt))
    n2 = int(round(approach_seconds / dt))
    pts1, x = _walk(ws.prep_center, ws.regions[task_part], n1, cfg.human.speed, dt, rng,
                    cfg.human.motion_sigma)
    pts2, _ = _walk(x, ws.home, n2, cfg.human.speed, dt, rng,
                    cfg.human.motion_sigma, stop_at=0.03)
    wrist = np.asarray(pts1 + pts2)
    n = len(wrist)
    ee = np.tile(ws.home, (n, 1))
    return SyntheticStream(dt * np.arange(1, n + 1), wrist, ee, n1, None)
