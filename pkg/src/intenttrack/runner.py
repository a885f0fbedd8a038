"""Trial execution: wire a configured world to its trackers and step it
to completion, deterministically per seed."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .config import PART_LABELS, ScenarioConfig, VARIANT_COOPERATE
from .filtering import FilterConfig, IntentionSpace, Posterior
from .metrics import Metrics, compute_metrics
from .motion import GilmParams
from .tracker import HighLevelConfig, HighLevelTracker, LowLevelTracker, MifConfig, TrackerStack
from .triallog import TrialLog
from .world import WorldState, Workspace, build_world, world_step


def _rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    # Separate streams keep tracker draws identical between a synthetic
    # trial and a replayed observation stream.
    ss = np.random.SeedSequence(seed)
    world_ss, tracker_ss = ss.spawn(2)
    return np.random.default_rng(world_ss), np.random.default_rng(tracker_ss)


def sample_schedule(cfg: ScenarioConfig, rng: np.random.Generator) -> tuple[str, ...]:
    if cfg.schedule is not None:
        return tuple(cfg.schedule)
    order = rng.permutation(len(PART_LABELS))
    return tuple(PART_LABELS[i] for i in order)


def build_trackers(cfg: ScenarioConfig, rng: np.random.Generator) -> Optional[TrackerStack]:
    """Both tracking levels; the cooperation-only baseline runs without."""
    if cfg.variant == VARIANT_COOPERATE:
        return None
    t = cfg.tracker
    ws = Workspace.from_config(cfg.workspace)
    task_goals = ws.task_goal_regions(t.goal_sigma_frac)
    fr_cov = t.fr_sigma**2 * np.eye(2)
    low = LowLevelTracker(
        MifConfig(
            filt=FilterConfig(t.horizon, t.dt, t.stay_prob_task),
            gilm=GilmParams(
                t.speed_window,
                t.process_sigma_task**2 * np.eye(2),
                t.goal_backprop_task,
            ),
            n_particles=t.n_particles,
            resample_frac=t.resample_frac,
        ),
        task_goals,
        fr_cov,
        rng,
    )
    p_ce = t.interactive_prior_coexist
    prior = Posterior(IntentionSpace.interactive(), np.array([p_ce, 1.0 - p_ce]))
    high = HighLevelTracker(
        HighLevelConfig(
            filt=FilterConfig(1, t.interactive_every * t.dt, t.stay_prob_interactive),
            gilm=GilmParams(
                t.speed_window,
                t.process_sigma_interactive**2 * np.eye(2),
                t.goal_backprop_interactive,
            ),
            every=t.interactive_every,
        ),
        task_goals,
        fr_cov,
        prior=prior,
    )
    return TrackerStack(low, high)


def run_trial(
    cfg: ScenarioConfig,
    wrist_trace: Optional[Sequence[tuple[float, float, bool]]] = None,
) -> TrialLog:
    """Run one trial to completion or the duration cap.

    With a wrist trace, the synthetic operator and camera are bypassed and
    the trace entries (x, y, pressed) drive the tick loop instead; pressed
    maps to a pull toward the cursor, mirroring the live session."""
    cfg.validate()
    world_rng, tracker_rng = _rngs(cfg.seed)
    schedule = sample_schedule(cfg, world_rng)
    world = build_world(cfg, schedule)
    trackers = build_trackers(cfg, tracker_rng)
    log = TrialLog(cfg, schedule)
    dt = cfg.tracker.dt

    if wrist_trace is not None:
        for x, y, pressed in wrist_trace:
            cursor = np.array([x, y])
            pull = cursor_pull(cursor, world, pressed)
            rec = world_step(world, trackers, dt, world_rng, cursor, pull)
            log.records.append(rec)
        log.completed = world.done
        return log

    max_ticks = math.ceil(cfg.duration_cap / dt)
    for _ in range(max_ticks):
        rec = world_step(world, trackers, dt, world_rng)
        log.records.append(rec)
        if world.done:
            break
    log.completed = world.done
    return log


def cursor_pull(cursor: np.ndarray, world: WorldState, pressed: bool) -> np.ndarray:
    """Live-session guidance mapping: a pressed cursor pulls the effector
    toward itself with the configured gain."""
    if not pressed:
        return np.zeros(2)
    return world.cfg.human.pull_gain * (cursor - world.robot.ee)


def run_metrics(cfg: ScenarioConfig) -> Metrics:
    return compute_metrics(run_trial(cfg))


def run_batch(
    variants: Sequence[str],
    repetitions: int,
    base: Optional[ScenarioConfig] = None,
    seed0: int = 0,
) -> dict[str, tuple[list[int], list[Metrics]]]:
    """Repeat each variant over consecutive seeds; returns per-variant
    seeds and metrics, ready for summarizing."""
    out: dict[str, tuple[list[int], list[Metrics]]] = {}
    for variant in variants:
        seeds: list[int] = []
        rows: list[Metrics] = []
        for i in range(repetitions):
            seed = seed0 + i
            cfg = (base or ScenarioConfig()).replace(variant=variant, seed=seed)
            rows.append(compute_metrics(run_trial(cfg)))
            seeds.append(seed)
        out[variant] = (seeds, rows)
    return out
