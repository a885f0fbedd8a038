"""Closed-loop 2D simulation of the collaborative assembly task.

One world holds a synthetic operator (wrist point), a robot end-effector
(point with velocity and mode), four part regions plus a preparation strip,
and the per-part assembly state machine. A tick advances the operator,
synthesizes a noisy wrist observation, smooths it, feeds the trackers,
updates the task queues and interaction mode, and drives the robot through
either the avoidance controller or the guidance controller.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import (
    PART_LABELS,
    ControlConfig,
    HumanConfig,
    ObservationConfig,
    ScenarioConfig,
    VARIANT_COEXIST,
    VARIANT_COOPERATE,
    VARIANT_HIT,
    WorkspaceConfig,
)
from .errors import PushStateError
from .filtering import COEXIST, COOPERATE, RECOVER, Posterior, map_intention
from .motion import GilmParams, GoalKind, GoalRegion
from .tracker import TrackerStack


class AssemblyState(str, enum.Enum):
    UNALIGNED = "unaligned"
    ALIGNED = "aligned"
    PUSHED_OK = "pushed-ok"
    PUSHED_FAILED = "pushed-failed"


# ---------------------------------------------------------------------------
# Workspace
# ---------------------------------------------------------------------------


@dataclass
class Workspace:
    """Table-plane geometry resolved from configuration."""

    regions: dict[str, np.ndarray]
    region_side: float
    prep_center: np.ndarray
    prep_size: np.ndarray
    bounds: tuple[float, float, float, float]
    home: np.ndarray

    @classmethod
    def from_config(cls, cfg: WorkspaceConfig) -> "Workspace":
        return cls(
            regions=cfg.region_centers(),
            region_side=cfg.region_side,
            prep_center=np.asarray(cfg.prep_center, dtype=float),
            prep_size=np.asarray(cfg.prep_size, dtype=float),
            bounds=cfg.bounds,
            home=np.asarray(cfg.robot_home, dtype=float),
        )

    def push_point(self, part: str) -> np.ndarray:
        return self.regions[part]

    def inside_region(self, part: str, point: np.ndarray) -> bool:
        d = np.abs(np.asarray(point) - self.regions[part])
        return bool(np.all(d <= self.region_side / 2.0))

    def inside_prep(self, point: np.ndarray) -> bool:
        d = np.abs(np.asarray(point) - self.prep_center)
        return bool(np.all(d <= self.prep_size / 2.0))

    def task_goal_regions(self, goal_sigma_frac: float) -> dict[str, GoalRegion]:
        sigma = goal_sigma_frac * self.region_side
        cov = sigma**2 * np.eye(2)
        return {
            label: GoalRegion(center, cov, GoalKind.TASK)
            for label, center in self.regions.items()
        }

    def clamp(self, point: np.ndarray) -> np.ndarray:
        x0, y0, x1, y1 = self.bounds
        return np.array([min(max(point[0], x0), x1), min(max(point[1], y0), y1)])


# ---------------------------------------------------------------------------
# Wrist sensing: synthetic camera + constant-velocity smoother
# ---------------------------------------------------------------------------


@dataclass
class KalmanState:
    """Constant-velocity filter state: (x, y, vx, vy)."""

    x: np.ndarray
    P: np.ndarray
    accel_var: float
    meas_var: float

    @classmethod
    def init(cls, pos: np.ndarray, accel_var: float, meas_var: float) -> "KalmanState":
        x = np.zeros(4)
        x[:2] = pos
        P = np.diag([meas_var, meas_var, 0.25, 0.25])
        return cls(x, P, accel_var, meas_var)


def observe(
    wrist: np.ndarray, cfg: ObservationConfig, rng: np.random.Generator
) -> Optional[np.ndarray]:
    """Raw wrist measurement: Gaussian noise per axis, occasional dropout."""
    dropped = rng.random() < cfg.dropout_prob
    noise = rng.normal(0.0, cfg.meas_sigma, size=2) if cfg.meas_sigma > 0 else np.zeros(2)
    if dropped:
        return None
    return np.asarray(wrist, dtype=float) + noise


def kalman_smooth(
    ks: KalmanState, measurement: Optional[np.ndarray], dt: float
) -> tuple[KalmanState, np.ndarray]:
    """Constant-velocity predict, then update when a measurement arrived."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    F = np.eye(4)
    F[0, 2] = dt
    F[1, 3] = dt
    q = ks.accel_var
    dt2 = dt * dt / 2.0
    G = np.array([[dt2, 0.0], [0.0, dt2], [dt, 0.0], [0.0, dt]])
    Q = q * (G @ G.T)

    x = F @ ks.x
    P = F @ ks.P @ F.T + Q

    if measurement is not None:
        H = np.zeros((2, 4))
        H[0, 0] = H[1, 1] = 1.0
        R = ks.meas_var * np.eye(2)
        innov = np.asarray(measurement, dtype=float) - H @ x
        S = H @ P @ H.T + R
        K = P @ H.T @ np.linalg.inv(S)
        x = x + K @ innov
        P = (np.eye(4) - K @ H) @ P
        P = (P + P.T) / 2.0
        if np.linalg.eigvalsh(P).min() < -1e-12:
            raise ValueError("smoother covariance lost positive semi-definiteness")

    out = KalmanState(x, P, ks.accel_var, ks.meas_var)
    return out, x[:2].copy()


# ---------------------------------------------------------------------------
# Task queues and mode switching
# ---------------------------------------------------------------------------


@dataclass
class TaskQueues:
    """Each part lives in exactly one of: task set (untouched), ongoing
    (operator believed aligning), ready (alignment finished, awaiting the
    robot), done (push attempted)."""

    task_set: list[str] = field(default_factory=lambda: list(PART_LABELS))
    ongoing: list[str] = field(default_factory=list)
    ready: list[str] = field(default_factory=list)
    done: list[str] = field(default_factory=list)
    sustain: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, list[str]]:
        return {
            "task": list(self.task_set),
            "ongoing": list(self.ongoing),
            "ready": list(self.ready),
            "done": list(self.done),
        }


_TIME_EPS = 1e-9  # absorbs float drift in accumulated tick sums


def queue_update(
    queues: TaskQueues,
    low_posterior: Posterior,
    dt: float,
    cfg: ControlConfig,
) -> list[str]:
    """Advance the sustained-confidence queue logic by one tick."""
    events: list[str] = []
    for label in list(queues.task_set):
        if low_posterior.prob(label) > cfg.align_prob:
            queues.sustain[label] = queues.sustain.get(label, 0.0) + dt
            if queues.sustain[label] >= cfg.align_sustain - _TIME_EPS:
                queues.task_set.remove(label)
                queues.ongoing.append(label)
                queues.sustain.pop(label, None)
                events.append(f"queue-ongoing:{label}")
        else:
            queues.sustain.pop(label, None)
    for label in list(queues.ongoing):
        if low_posterior.prob(label) < cfg.done_prob:
            queues.ongoing.remove(label)
            queues.ready.append(label)
            events.append(f"queue-ready:{label}")
    return events


@dataclass
class ModeState:
    mode: str = COEXIST
    co_timer: float = 0.0


def mode_switch(state: ModeState, high_posterior: Posterior, dt: float, cfg: ControlConfig) -> bool:
    """Coexist -> cooperate on strictly-sustained cooperation confidence.
    The reverse switch is owned by the guidance-release detector."""
    if state.mode == COOPERATE:
        return False
    if high_posterior.prob(COOPERATE) > cfg.coop_prob:
        state.co_timer += dt
    else:
        state.co_timer = 0.0
    if state.co_timer >= cfg.coop_sustain - _TIME_EPS:
        state.mode = COOPERATE
        state.co_timer = 0.0
        return True
    return False


# ---------------------------------------------------------------------------
# Robot motion primitives
# ---------------------------------------------------------------------------


def clip_speed(v: np.ndarray, limit: float) -> np.ndarray:
    speed = float(np.linalg.norm(v))
    if speed > limit and speed > 0:
        return v * (limit / speed)
    return v


def apf_velocity(
    ee: np.ndarray,
    goal_point: np.ndarray,
    wrist: np.ndarray,
    mode: str,
    cfg: ControlConfig,
) -> np.ndarray:
    """Potential-field command: constant pull to the goal plus a clipped
    inverse-square human term, repulsive while coexisting and attractive
    while approaching for cooperation. Clipped to the mode's speed limit."""
    ee = np.asarray(ee, dtype=float)
    to_goal = np.asarray(goal_point, dtype=float) - ee
    dist_goal = float(np.linalg.norm(to_goal))
    v = np.zeros(2)
    if dist_goal > 1e-9:
        v += cfg.apf_goal_speed * to_goal / dist_goal

    from_wrist = ee - np.asarray(wrist, dtype=float)
    r = float(np.linalg.norm(from_wrist))
    if r <= cfg.apf_r_max:
        r_eff = min(max(r, cfg.apf_r_min), cfg.apf_r_max)
        mag = cfg.apf_human_gain / (r_eff * r_eff)
        if r > 1e-9:
            direction = from_wrist / r
        else:
            direction = np.array([0.0, 1.0])  # coincident: push toward the far side
        if mode == COOPERATE:
            direction = -direction
        v += mag * direction

    limit = cfg.speed_limit_guided if mode == COOPERATE else cfg.speed_limit_coexist
    return clip_speed(v, limit)


def smooth_velocity(v_current: np.ndarray, v_goal: np.ndarray, k: float) -> np.ndarray:
    """Running mean of commands: k keeps the previous velocity."""
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"smoothing weight must be in [0, 1], got {k}")
    return k * np.asarray(v_current, dtype=float) + (1.0 - k) * np.asarray(v_goal, dtype=float)


# ---------------------------------------------------------------------------
# Human operator phase machine
# ---------------------------------------------------------------------------


class PhaseKind(enum.Enum):
    ALIGN = "align"
    REST = "rest"
    IDLE = "idle"
    ADJUST = "adjust"
    APPROACH = "approach"
    GUIDE = "guide"


@dataclass
class Phase:
    kind: PhaseKind
    part: Optional[str] = None
    dwell: float = 0.0
    elapsed: float = 0.0


@dataclass
class HumanAgent:
    """Scripted operator: follows a phase queue, reacts to failures by
    realigning and then offering cooperation."""

    wrist: np.ndarray
    cfg: HumanConfig
    phases: deque[Phase]
    pull: np.ndarray = field(default_factory=lambda: np.zeros(2))
    pending_recoveries: deque[str] = field(default_factory=deque)
    attached: bool = False

    @property
    def phase(self) -> Phase:
        return self.phases[0]

    @property
    def gt_task(self) -> Optional[str]:
        p = self.phase
        if p.kind in (PhaseKind.ALIGN, PhaseKind.ADJUST):
            return p.part
        return None

    @property
    def gt_interactive(self) -> str:
        return COOPERATE if self.phase.kind in (PhaseKind.APPROACH, PhaseKind.GUIDE) else COEXIST

    def interrupt_for(self, phases: list[Phase]):
        for p in reversed(phases):
            self.phases.appendleft(p)


def build_schedule_phases(schedule: tuple[str, ...], cfg: HumanConfig, variant: str) -> deque[Phase]:
    phases: deque[Phase] = deque()
    for part in schedule:
        phases.append(Phase(PhaseKind.ALIGN, part, cfg.align_dwell))
        if variant == VARIANT_COOPERATE:
            phases.append(Phase(PhaseKind.APPROACH, part))
            phases.append(Phase(PhaseKind.GUIDE, part))
        elif cfg.rest_between:
            phases.append(Phase(PhaseKind.REST, None, cfg.rest_dwell))
    if variant == VARIANT_COOPERATE:
        phases.append(Phase(PhaseKind.GUIDE, None))  # walk the robot back home
    phases.append(Phase(PhaseKind.IDLE))
    return phases


def _capped_step(pos: np.ndarray, target: np.ndarray, speed: float, dt: float) -> np.ndarray:
    delta = target - pos
    dist = float(np.linalg.norm(delta))
    if dist < 1e-12:
        return pos.copy()
    step = min(speed * dt, dist)
    return pos + (step / dist) * delta


def human_step(world: "WorldState", dt: float, rng: np.random.Generator) -> None:
    """Advance the operator one tick: motion toward the current phase's
    target, dwell bookkeeping, phase transitions, and the guidance pull."""
    human = world.human
    ws = world.workspace
    cfg = human.cfg
    robot = world.robot

    # Failures interrupt passive phases immediately, active ones at their end.
    while human.pending_recoveries and human.phase.kind in (PhaseKind.REST, PhaseKind.IDLE):
        part = human.pending_recoveries.popleft()
        if world.assemblies[part] == AssemblyState.PUSHED_OK:
            continue  # resolved by another push in the meantime
        human.interrupt_for(
            [
                Phase(PhaseKind.ALIGN, part, cfg.align_dwell),
                Phase(PhaseKind.APPROACH, part),
                Phase(PhaseKind.GUIDE, part),
            ]
        )
        world.events.append(f"recover-start:{part}")
        break

    # Skip pointless work: a completed part needs no alignment anywhere, and
    # without a recovery mode a failed push is final.
    while human.phase.kind == PhaseKind.ALIGN:
        state = world.assemblies[human.phase.part]
        if state == AssemblyState.PUSHED_OK or (
            world.cfg.variant == VARIANT_COEXIST and state == AssemblyState.PUSHED_FAILED
        ):
            human.phases.popleft()
        else:
            break

    phase = human.phase
    human.pull = np.zeros(2)
    noise = rng.normal(0.0, cfg.motion_sigma, size=2) if cfg.motion_sigma > 0 else np.zeros(2)

    if phase.kind in (PhaseKind.ALIGN, PhaseKind.ADJUST):
        target = ws.regions[phase.part]
        if phase.kind == PhaseKind.ADJUST:
            # Correcting a placement is active hand work: the wrist sweeps
            # around the operator side of the region, so nearby avoidance
            # has to keep yielding to a moving hand.
            sweep = np.array(
                [
                    0.030 * math.sin(2.0 * math.pi * 0.8 * phase.elapsed),
                    0.012 * math.sin(2.0 * math.pi * 0.5 * phase.elapsed + 1.0),
                ]
            )
            target = target + np.array([0.0, -cfg.adjust_offset]) + sweep
        human.wrist = _capped_step(human.wrist, target, cfg.speed, dt) + noise
        inside = ws.inside_region(phase.part, human.wrist) or (
            phase.kind == PhaseKind.ADJUST
            and float(np.linalg.norm(human.wrist - target)) < 0.05
        )
        if inside:
            phase.elapsed += dt
        if phase.elapsed >= phase.dwell:
            if phase.kind == PhaseKind.ALIGN:
                world.set_assembly(phase.part, AssemblyState.ALIGNED)
                world.events.append(f"align:{phase.part}")
            else:
                world.events.append(f"adjust-done:{phase.part}")
            human.phases.popleft()
    elif phase.kind in (PhaseKind.REST, PhaseKind.IDLE):
        human.wrist = _capped_step(human.wrist, ws.prep_center, cfg.speed, dt) + noise
        if phase.kind == PhaseKind.REST:
            if ws.inside_prep(human.wrist):
                phase.elapsed += dt
            if phase.elapsed >= phase.dwell:
                human.phases.popleft()
    elif phase.kind == PhaseKind.APPROACH:
        phase.elapsed += dt
        to_wrist = human.wrist - robot.ee
        dist = float(np.linalg.norm(to_wrist))
        # Hold at the offering distance; close in only if the switch is
        # overdue (liveness failsafe, normally never reached).
        overtime = max(0.0, phase.elapsed - cfg.approach_hold)
        standoff = max(0.02, cfg.approach_standoff * (1.0 - overtime / 6.0))
        if dist > 1e-9:
            target = robot.ee + (standoff / dist) * to_wrist if dist > standoff else human.wrist
        else:
            target = human.wrist
        human.wrist = _capped_step(human.wrist, target, cfg.speed, dt) + noise
        if robot.in_contact:
            human.phases.popleft()
    elif phase.kind == PhaseKind.GUIDE:
        # Hand on the effector: the wrist rides it and pulls toward the goal.
        human.attached = True
        human.wrist = robot.ee.copy()
        target = ws.push_point(phase.part) if phase.part is not None else ws.home
        err = target - robot.ee
        if float(np.linalg.norm(err)) >= cfg.release_dist:
            human.pull = cfg.pull_gain * err
        # Completion is event-driven: the recovery push (or home release).


def human_notify(world: "WorldState", event: str) -> None:
    """Let the operator react to world events that end guide phases."""
    human = world.human
    if human.phase.kind != PhaseKind.GUIDE:
        return
    part = human.phase.part
    done = (
        (part is not None and event == f"pushed:{part}")
        or (part is None and event == "released-home")
        or event == "release-noop"  # nothing left to push here: let go
    )
    if done:
        human.phases.popleft()
        human.attached = False


# ---------------------------------------------------------------------------
# Pushing
# ---------------------------------------------------------------------------


def push_action(world: "WorldState", part: str, rng: np.random.Generator, guided: bool = False) -> str:
    """Resolve one push. Coexistence pushes draw a uniform placement offset
    and require the part to be queued ready; guided recovery pushes land
    exactly on the operator-chosen point."""
    if not guided and part not in world.queues.ready:
        raise PushStateError(f"{part} is not in the ready queue")
    cfg = world.cfg.control
    if guided:
        offset = np.zeros(2)
    else:
        offset = rng.uniform(-cfg.push_noise, cfg.push_noise, size=2)
    forced = part in world.forced_failures
    aligned = world.assemblies[part] == AssemblyState.ALIGNED
    ok = aligned and not forced and float(np.linalg.norm(offset)) <= cfg.push_tol
    if forced:
        world.forced_failures.discard(part)
    world.set_assembly(part, AssemblyState.PUSHED_OK if ok else AssemblyState.PUSHED_FAILED)
    tag = f"push-ok:{part}" if ok else f"push-fail:{part}"
    world.events.append(tag)
    if world.cfg.shake_prob > 0 and rng.random() < world.cfg.shake_prob:
        neighbors = [
            p for p, s in world.assemblies.items() if p != part and s == AssemblyState.ALIGNED
        ]
        if neighbors:
            victim = neighbors[int(rng.integers(len(neighbors)))]
            world.set_assembly(victim, AssemblyState.UNALIGNED)
            world.events.append(f"shake:{victim}")
            if world.cfg.variant == VARIANT_HIT:
                _queue_recovery(world, victim)
    return "pushed-ok" if ok else "pushed-failed"


def admittance_step(
    robot: "RobotAgent", pull: np.ndarray, dt: float, cfg: ControlConfig
) -> tuple[np.ndarray, bool]:
    """Damping admittance: velocity proportional to the applied pull,
    clipped to the guided limit. Flags the end of guidance after the pull
    stays below the release threshold for the configured hold time."""
    if robot.mode != COOPERATE:
        raise RuntimeError("admittance requires cooperation mode")
    v = clip_speed(np.asarray(pull, dtype=float) / cfg.admittance_damping, cfg.speed_limit_guided)
    if float(np.linalg.norm(pull)) < cfg.release_force:
        robot.release_timer += dt
    else:
        robot.release_timer = 0.0
    ended = robot.release_timer >= cfg.release_time - _TIME_EPS
    return v, ended


# ---------------------------------------------------------------------------
# Robot agent and world state
# ---------------------------------------------------------------------------


@dataclass
class RobotAgent:
    ee: np.ndarray
    vel: np.ndarray = field(default_factory=lambda: np.zeros(2))
    mode: str = COEXIST
    pushing: Optional[str] = None
    push_timer: float = 0.0
    adjust_episodes: dict[str, int] = field(default_factory=dict)
    in_contact: bool = False
    release_timer: float = 0.0
    withdrawing: bool = False


@dataclass
class TickRecord:
    t: float
    wrist: np.ndarray
    raw: Optional[np.ndarray]
    smoothed: np.ndarray
    ee: np.ndarray
    mode: str
    post1: Optional[np.ndarray]
    post2: Optional[np.ndarray]
    pull: float
    queues: dict[str, list[str]]
    assemblies: dict[str, str]
    gt1: Optional[str]
    gt2: Optional[str]
    events: list[str]


@dataclass
class WorldState:
    cfg: ScenarioConfig
    workspace: Workspace
    human: HumanAgent
    robot: RobotAgent
    queues: TaskQueues
    mode_state: ModeState
    kalman: KalmanState
    assemblies: dict[str, AssemblyState]
    forced_failures: set[str]
    t: float = 0.0
    tick: int = 0
    done: bool = False
    events: list[str] = field(default_factory=list)
    last_smoothed: np.ndarray | None = None

    def set_assembly(self, part: str, state: AssemblyState):
        if self.assemblies[part] == AssemblyState.PUSHED_OK:
            return  # terminal
        self.assemblies[part] = state

    @property
    def all_pushed_ok(self) -> bool:
        return all(s == AssemblyState.PUSHED_OK for s in self.assemblies.values())

    @property
    def work_finished(self) -> bool:
        """No pushes left to perform under this variant's capabilities."""
        if self.cfg.variant == VARIANT_COOPERATE:
            return self.all_pushed_ok
        queues_drained = not (self.queues.task_set or self.queues.ongoing or self.queues.ready)
        if self.cfg.variant == VARIANT_HIT:
            return queues_drained and self.all_pushed_ok and not self.human.pending_recoveries
        # Coexistence baseline: every part attempted; failures stay failed.
        attempted = all(
            s in (AssemblyState.PUSHED_OK, AssemblyState.PUSHED_FAILED)
            for s in self.assemblies.values()
        )
        return queues_drained and attempted


def build_world(cfg: ScenarioConfig, schedule: tuple[str, ...]) -> WorldState:
    ws = Workspace.from_config(cfg.workspace)
    start = ws.prep_center.copy()
    human = HumanAgent(
        wrist=start,
        cfg=cfg.human,
        phases=build_schedule_phases(schedule, cfg.human, cfg.variant),
    )
    robot = RobotAgent(ee=ws.home.copy(), mode=COOPERATE if cfg.variant == VARIANT_COOPERATE else COEXIST)
    kalman = KalmanState.init(
        start, cfg.observation.kalman_accel_var, max(cfg.observation.meas_sigma**2, 1e-8)
    )
    return WorldState(
        cfg=cfg,
        workspace=ws,
        human=human,
        robot=robot,
        queues=TaskQueues(),
        mode_state=ModeState(mode=robot.mode),
        kalman=kalman,
        assemblies={p: AssemblyState.UNALIGNED for p in PART_LABELS},
        forced_failures=set(cfg.inject_failures),
    )


def _queue_recovery(world: WorldState, part: str) -> None:
    if part not in world.human.pending_recoveries:
        world.human.pending_recoveries.append(part)


def _nearest_pushable(world: WorldState, point: np.ndarray, radius: float) -> Optional[str]:
    best, best_d = None, radius
    for part in PART_LABELS:
        if world.assemblies[part] in (AssemblyState.ALIGNED, AssemblyState.PUSHED_FAILED):
            d = float(np.linalg.norm(world.workspace.push_point(part) - point))
            if d <= best_d:
                best, best_d = part, d
    return best


def _coexist_control(world: WorldState, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Avoidance controller: serve the ready queue, else return home."""
    robot = world.robot
    ws = world.workspace
    ctrl = world.cfg.control

    if robot.pushing is not None:
        # A hand inside the region aborts the press; the part stays queued.
        if (
            float(np.linalg.norm(world.human.wrist - ws.push_point(robot.pushing)))
            < ctrl.yield_radius
        ):
            world.events.append(f"push-abort:{robot.pushing}")
            robot.pushing = None
            robot.push_timer = 0.0
            return np.zeros(2)
        robot.push_timer -= dt
        if robot.push_timer <= 0.0:
            part = robot.pushing
            robot.pushing = None
            outcome = push_action(world, part, rng)
            world.queues.ready.remove(part)
            world.queues.done.append(part)
            if outcome == "pushed-failed" and world.cfg.variant == VARIANT_HIT:
                _queue_recovery(world, part)
            human_notify(world, f"pushed:{part}")
        return np.zeros(2)

    # Parts completed through guidance in the meantime need no push trip.
    while world.queues.ready and world.assemblies[world.queues.ready[0]] == AssemblyState.PUSHED_OK:
        done = world.queues.ready.pop(0)
        world.queues.done.append(done)

    target = world.queues.ready[0] if world.queues.ready else None
    goal = ws.push_point(target) if target is not None else ws.home

    if target is not None:
        # The hand owns the region: retreat to a hover distance and wait
        # for it to clear rather than contesting the push point.
        if float(np.linalg.norm(world.human.wrist - goal)) < ctrl.yield_radius:
            away = robot.ee - world.human.wrist
            r = float(np.linalg.norm(away))
            if r > 1e-9:
                goal = world.human.wrist + (ctrl.retreat_standoff / r) * away
            else:
                goal = ws.home
        elif float(np.linalg.norm(robot.ee - goal)) <= ctrl.arrive_tol:
            robot.pushing = target
            robot.push_timer = ctrl.push_duration
            # Coexistence-baseline habit: seeing the press start, the
            # operator may dart in to correct the placement, forcing an
            # abort (at most twice per part, less likely the second time).
            episodes = robot.adjust_episodes.get(target, 0)
            if world.cfg.variant == VARIANT_COEXIST and episodes < 2:
                robot.adjust_episodes[target] = episodes + 1
                if rng.random() < world.cfg.human.adjust_prob * 0.5**episodes:
                    world.human.interrupt_for(
                        [Phase(PhaseKind.ADJUST, target, world.cfg.human.adjust_dwell)]
                    )
                    world.events.append(f"adjust:{target}")
            return np.zeros(2)

    return apf_velocity(robot.ee, goal, world.human.wrist, COEXIST, ctrl)


def _cooperate_control(world: WorldState, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Guidance controller: approach the wrist, then comply with the pull;
    a sustained release triggers the recovery push and hands back control."""
    robot = world.robot
    ctrl = world.cfg.control

    if not robot.in_contact:
        if float(np.linalg.norm(world.human.wrist - robot.ee)) < ctrl.contact_radius:
            robot.in_contact = True
            robot.release_timer = 0.0
            world.events.append("contact")
            return np.zeros(2)
        return apf_velocity(robot.ee, world.human.wrist, world.human.wrist, COOPERATE, ctrl)

    v, ended = admittance_step(robot, world.human.pull, dt, ctrl)
    if ended:
        world.events.append("release")
        part = _nearest_pushable(world, robot.ee, ctrl.push_snap_radius)
        if part is not None:
            push_action(world, part, rng, guided=True)
            human_notify(world, f"pushed:{part}")
        else:
            human_notify(world, "released-home")
            human_notify(world, "release-noop")
        robot.in_contact = False
        robot.release_timer = 0.0
        robot.mode = COEXIST
        world.mode_state.mode = COEXIST
        world.events.append(f"mode:{COEXIST}")
        return np.zeros(2)
    return v


def _passive_control(world: WorldState, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Cooperation-only baseline: compliant whenever the operator holds it."""
    robot = world.robot
    ctrl = world.cfg.control
    if not robot.in_contact:
        if float(np.linalg.norm(world.human.wrist - robot.ee)) < ctrl.contact_radius:
            robot.in_contact = True
            robot.release_timer = 0.0
            world.events.append("contact")
        return np.zeros(2)
    v, ended = admittance_step(robot, world.human.pull, dt, ctrl)
    if ended:
        world.events.append("release")
        part = _nearest_pushable(world, robot.ee, ctrl.push_snap_radius)
        if part is not None:
            push_action(world, part, rng, guided=True)
            human_notify(world, f"pushed:{part}")
        else:
            human_notify(world, "released-home")
            human_notify(world, "release-noop")
        robot.in_contact = False
        robot.release_timer = 0.0
        return np.zeros(2)
    return v


def world_step(
    world: WorldState,
    trackers: Optional[TrackerStack],
    dt: float,
    rng: np.random.Generator,
    wrist_override: Optional[np.ndarray] = None,
    pull_override: Optional[np.ndarray] = None,
) -> TickRecord:
    """One full simulation tick. With a wrist override the synthetic
    operator and camera are bypassed: the override is treated as the raw
    measurement (live-session and replay paths)."""
    world.events = []
    cfg = world.cfg
    robot = world.robot

    if wrist_override is None:
        human_step(world, dt, rng)
        raw = observe(world.human.wrist, cfg.observation, rng)
    else:
        world.human.wrist = np.asarray(wrist_override, dtype=float)
        if pull_override is not None:
            world.human.pull = np.asarray(pull_override, dtype=float)
        raw = world.human.wrist.copy()

    world.kalman, smoothed = kalman_smooth(world.kalman, raw, dt)
    world.last_smoothed = smoothed

    t_new = world.t + dt
    post1 = post2 = None
    if trackers is not None:
        trackers.ingest(t_new, smoothed, robot.ee)
        post1 = trackers.task_posterior
        post2 = trackers.interactive_posterior
        # Parts finished through guidance need no further queue handling.
        for q in (world.queues.task_set, world.queues.ongoing):
            for label in list(q):
                if world.assemblies[label] == AssemblyState.PUSHED_OK:
                    q.remove(label)
                    world.queues.done.append(label)
        queue_events = queue_update(world.queues, post1, dt, cfg.control)
        world.events.extend(queue_events)

    if cfg.variant == VARIANT_HIT and trackers is not None and robot.mode == COEXIST:
        if robot.pushing is None and mode_switch(world.mode_state, post2, dt, cfg.control):
            robot.mode = COOPERATE
            robot.in_contact = False
            world.events.append(f"mode:{COOPERATE}")

    if cfg.variant == VARIANT_COOPERATE:
        v_raw = _passive_control(world, dt, rng)
    elif robot.mode == COOPERATE:
        v_raw = _cooperate_control(world, dt, rng)
    else:
        v_raw = _coexist_control(world, dt, rng)

    limit = (
        cfg.control.speed_limit_guided
        if robot.mode == COOPERATE
        else cfg.control.speed_limit_coexist
    )
    v_cmd = clip_speed(smooth_velocity(robot.vel, v_raw, cfg.control.smooth_k), limit)
    if (
        robot.mode == COEXIST
        and cfg.variant != VARIANT_COOPERATE
        and float(np.linalg.norm(world.human.wrist - robot.ee)) < cfg.control.protective_stop_radius
    ):
        v_cmd = np.zeros(2)  # protective stop: brake, bypassing the smoother
    robot.vel = v_cmd
    robot.ee = world.workspace.clamp(robot.ee + v_cmd * dt)

    world.t = t_new
    world.tick += 1

    if (
        world.work_finished
        and not world.done
        and float(np.linalg.norm(robot.ee - world.workspace.home)) <= 0.03
        and not robot.in_contact
    ):
        world.done = True
        world.events.append("trial-complete")

    applied_pull = (
        float(np.linalg.norm(world.human.pull))
        if robot.in_contact and (robot.mode == COOPERATE or cfg.variant == VARIANT_COOPERATE)
        else 0.0
    )

    return TickRecord(
        t=world.t,
        wrist=world.human.wrist.copy(),
        raw=None if raw is None else raw.copy(),
        smoothed=smoothed,
        ee=robot.ee.copy(),
        mode=COOPERATE if cfg.variant == VARIANT_COOPERATE else robot.mode,
        post1=None if post1 is None else post1.probs.copy(),
        post2=None if post2 is None else post2.probs.copy(),
        pull=applied_pull,
        queues=world.queues.to_dict(),
        assemblies={p: s.value for p, s in world.assemblies.items()},
        gt1=world.human.gt_task if wrist_override is None else None,
        gt2=world.human.gt_interactive if wrist_override is None else None,
        events=list(world.events),
    )
