"""Scenario configuration: one place for every tunable constant.

Values that matter to the tracking and control behavior carry a short
rationale comment next to their default. Configs serialize to a versioned
JSON document; validation errors name the offending field path.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError

SCHEMA_VERSION = 1

VARIANT_COEXIST = "coexistence-only"
VARIANT_COOPERATE = "cooperation-only"
VARIANT_HIT = "hit"
VARIANTS = (VARIANT_COEXIST, VARIANT_COOPERATE, VARIANT_HIT)

# CLI shorthand for variants.
VARIANT_ALIASES = {
    "coex": VARIANT_COEXIST,
    "coop": VARIANT_COOPERATE,
    "hit": VARIANT_HIT,
    VARIANT_COEXIST: VARIANT_COEXIST,
    VARIANT_COOPERATE: VARIANT_COOPERATE,
    VARIANT_HIT: VARIANT_HIT,
}

PART_LABELS = ("part1", "part2", "part3", "part4")


@dataclass(frozen=True)
class WorkspaceConfig:
    """Table-plane geometry, in meters. The four part regions are 10 cm
    squares on a 2x2 grid, 26 cm apart horizontally and 15 cm apart
    vertically; the preparation strip sits at the table edge by the human."""

    region_side: float = 0.10
    grid_center: tuple[float, float] = (0.45, 0.425)
    spacing_x: float = 0.26
    spacing_y: float = 0.15
    prep_center: tuple[float, float] = (0.45, 0.075)
    prep_size: tuple[float, float] = (0.16, 0.05)
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 0.90, 0.70)
    robot_home: tuple[float, float] = (0.45, 0.62)

    def region_centers(self) -> dict[str, np.ndarray]:
        cx, cy = self.grid_center
        dx, dy = self.spacing_x / 2.0, self.spacing_y / 2.0
        return {
            "part1": np.array([cx - dx, cy + dy]),
            "part2": np.array([cx + dx, cy + dy]),
            "part3": np.array([cx - dx, cy - dy]),
            "part4": np.array([cx + dx, cy - dy]),
        }


@dataclass(frozen=True)
class ObservationConfig:
    """Synthetic wrist sensing and its constant-velocity smoother."""

    meas_sigma: float = 0.01  # 1 cm per-axis camera-detection stand-in
    dropout_prob: float = 0.02
    kalman_accel_var: float = 4.0  # (m/s^2)^2; wrist accelerations ~2 m/s^2


@dataclass(frozen=True)
class TrackerParamsConfig:
    """Both tracking levels. Task strides cover 5 samples at 30 Hz
    (0.167 s); interactive strides are one 0.2 s step at 5 Hz, so both
    stay inside the 0.2 s stride bound."""

    tick_rate: float = 30.0
    horizon: int = 5  # task-level stride, in ticks
    interactive_every: int = 6  # interactive stride, in ticks (5 Hz)
    stay_prob_task: float = 0.96  # per task stride
    stay_prob_interactive: float = 0.98  # per interactive stride; must exceed task level
    interactive_prior_coexist: float = 0.99  # system boots in the coexistence module
    n_particles: int = 1000
    resample_frac: float = 0.5  # resample when ESS < frac * N
    speed_window: int = 15  # 0.5 s of context for the speed estimate
    process_sigma_task: float = 0.006  # m per 1/30 s step; matches wrist jitter + smoothing error
    process_sigma_interactive: float = 0.012  # m per 0.2 s step
    goal_sigma_frac: float = 0.25  # task goal sigma = frac * region side
    fr_sigma: float = 0.02  # m; tuned so cooperation locks in time (scripts/tune_fr_cov.py)
    goal_backprop_task: bool = False  # goal spread would swamp the 8 mm per-tick signal
    goal_backprop_interactive: bool = True  # goal spread is the discriminating scale at 0.2 s

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate


@dataclass(frozen=True)
class ControlConfig:
    """Robot decision thresholds and motion limits."""

    # Queue thresholds: sustained-confidence entry, low-probability exit.
    align_prob: float = 0.80
    align_sustain: float = 1.5  # s
    done_prob: float = 0.25
    # Mode switch: cooperation confidence sustained half a second.
    coop_prob: float = 0.90
    coop_sustain: float = 0.5  # s
    # Potential field: constant goal pull, clipped inverse-square human term.
    apf_goal_speed: float = 0.08  # m/s
    apf_human_gain: float = 1.25e-3  # m^3/s; 0.5 m/s at the 5 cm clip floor
    apf_r_min: float = 0.05  # m
    apf_r_max: float = 0.50  # m
    # Speed limits: reduced while sharing the space, higher under guidance.
    speed_limit_coexist: float = 0.10  # m/s
    speed_limit_guided: float = 0.30  # m/s
    smooth_k: float = 0.6  # velocity running-mean weight on the previous command
    # Protective stop: freeze instead of fleeing once the wrist is this
    # close, so coexistence motion never happens inside the repulsion floor.
    protective_stop_radius: float = 0.08  # m
    # Yield: while the operator's hand occupies the current push target the
    # robot retreats to a hover distance instead of contesting the region.
    yield_radius: float = 0.16  # m between wrist and push point
    retreat_standoff: float = 0.20  # m hover distance from the wrist
    # Guidance: contact gate, damping admittance, release detection.
    contact_radius: float = 0.05  # m
    admittance_damping: float = 10.0  # (N-equivalent)/(m/s)
    release_force: float = 0.5  # N-equivalent; below this counts as released
    release_time: float = 1.0  # s of sustained release before the recovery push
    push_snap_radius: float = 0.04  # m; guided release must end near a part to push it
    # Pushing: uniform placement noise, success tolerance, fixed dwell
    # (descend, press, retract). A hand entering the region aborts the press.
    push_noise: float = 0.02  # m; +/- bound per axis
    push_tol: float = 0.02 * math.sqrt(3.0 / math.pi)  # ~25% failures per push
    push_duration: float = 2.0  # s the arm spends on a push
    arrive_tol: float = 0.01  # m; close enough to a waypoint


@dataclass(frozen=True)
class HumanConfig:
    """Synthetic operator: wrist speed, motion noise, task pacing."""

    speed: float = 0.25  # m/s comfortable reaching speed
    motion_sigma: float = 0.002  # m per-tick process noise
    align_dwell: float = 3.0  # s working inside a region
    rest_dwell: float = 1.0  # s at the preparation strip between parts
    rest_between: bool = True  # visit the preparation strip between parts
    approach_standoff: float = 0.10  # m; hover distance while offering cooperation
    approach_hold: float = 4.0  # s at full standoff before the closing failsafe kicks in
    pull_gain: float = 20.0  # N-equivalent per meter of guidance error
    release_dist: float = 0.02  # m; guidance error below this ends the pull
    # Coexistence-baseline habit: dart in to adjust a part while the robot
    # closes in on its push, trapping it at the avoidance equilibrium.
    adjust_prob: float = 0.7
    adjust_dwell: float = 1.5  # s
    adjust_offset: float = 0.07  # m toward the operator side of the region


@dataclass(frozen=True)
class ScenarioConfig:
    """One trial: variant, seed, schedule, and all parameter groups."""

    variant: str = VARIANT_HIT
    seed: int = 0
    duration_cap: float = 600.0  # s
    schedule: tuple[str, ...] | None = None  # part order; None samples a permutation
    inject_failures: tuple[str, ...] = ()  # parts whose first push is forced to fail
    shake_prob: float = 0.0  # per-push chance of un-aligning a neighboring part
    workspace: WorkspaceConfig = field(default_factory=WorkspaceConfig)
    observation: ObservationConfig = field(default_factory=ObservationConfig)
    tracker: TrackerParamsConfig = field(default_factory=TrackerParamsConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    human: HumanConfig = field(default_factory=HumanConfig)

    def validate(self) -> "ScenarioConfig":
        _check(self.variant in VARIANTS, "variant", f"must be one of {VARIANTS}")
        _check(self.duration_cap > 0, "duration_cap", "must be positive")
        if self.schedule is not None:
            for i, label in enumerate(self.schedule):
                _check(label in PART_LABELS, f"schedule[{i}]", f"unknown part {label!r}")
        for i, label in enumerate(self.inject_failures):
            _check(label in PART_LABELS, f"inject_failures[{i}]", f"unknown part {label!r}")
        _check(0.0 <= self.shake_prob <= 1.0, "shake_prob", "must be in [0, 1]")
        w = self.workspace
        _check(w.region_side > 0, "workspace.region_side", "must be positive")
        x0, y0, x1, y1 = w.bounds
        _check(x0 < x1 and y0 < y1, "workspace.bounds", "must be a nonempty box")
        for name, c in w.region_centers().items():
            inside = x0 <= c[0] - w.region_side / 2 and c[0] + w.region_side / 2 <= x1 \
                and y0 <= c[1] - w.region_side / 2 and c[1] + w.region_side / 2 <= y1
            _check(inside, f"workspace.{name}", "region outside table bounds")
        _check(w.spacing_x > w.region_side, "workspace.spacing_x", "regions overlap")
        o = self.observation
        _check(o.meas_sigma >= 0, "observation.meas_sigma", "must be nonnegative")
        _check(0 <= o.dropout_prob <= 1, "observation.dropout_prob", "must be in [0, 1]")
        t = self.tracker
        _check(t.tick_rate > 0, "tracker.tick_rate", "must be positive")
        _check(t.horizon >= 1, "tracker.horizon", "must be >= 1")
        _check(
            t.horizon * t.dt <= 0.2 + 1e-12,
            "tracker.horizon",
            "task stride must stay within 0.2 s",
        )
        _check(
            t.interactive_every * t.dt <= 0.2 + 1e-12,
            "tracker.interactive_every",
            "interactive stride must stay within 0.2 s",
        )
        _check(0 <= t.stay_prob_task <= 1, "tracker.stay_prob_task", "must be in [0, 1]")
        _check(
            t.stay_prob_interactive > t.stay_prob_task,
            "tracker.stay_prob_interactive",
            "interactive level must change less often than task level",
        )
        _check(t.n_particles >= 1, "tracker.n_particles", "must be >= 1")
        _check(t.speed_window >= 2, "tracker.speed_window", "must be >= 2")
        c = self.control
        _check(0 < c.align_prob < 1, "control.align_prob", "must be in (0, 1)")
        _check(0 < c.done_prob < c.align_prob, "control.done_prob", "must be below align_prob")
        _check(0 < c.coop_prob < 1, "control.coop_prob", "must be in (0, 1)")
        _check(0 < c.apf_r_min < c.apf_r_max, "control.apf_r_min", "need 0 < r_min < r_max")
        _check(
            c.speed_limit_coexist < c.speed_limit_guided,
            "control.speed_limit_coexist",
            "coexistence limit must stay below the guided limit",
        )
        _check(0 <= c.smooth_k <= 1, "control.smooth_k", "must be in [0, 1]")
        _check(0 <= c.push_tol <= c.push_noise or c.push_noise == 0,
               "control.push_tol", "tolerance beyond the noise bound never fails")
        h = self.human
        _check(h.speed > 0, "human.speed", "must be positive")
        _check(h.align_dwell > 0, "human.align_dwell", "must be positive")
        return self

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        doc = asdict(self)
        doc["schema_version"] = SCHEMA_VERSION
        return doc

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ScenarioConfig":
        doc = dict(doc)
        version = doc.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version}")
        kwargs: dict[str, Any] = {}
        sections = {
            "workspace": WorkspaceConfig,
            "observation": ObservationConfig,
            "tracker": TrackerParamsConfig,
            "control": ControlConfig,
            "human": HumanConfig,
        }
        for key, value in doc.items():
            if key in sections:
                kwargs[key] = _build_section(sections[key], value, key)
            elif key in _FIELD_NAMES:
                kwargs[key] = _coerce_top(key, value)
            else:
                raise ConfigError(f"{key}: unknown field")
        try:
            cfg = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("top level: expected an object")
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_json(Path(path).read_text())

    def replace(self, **kw) -> "ScenarioConfig":
        from dataclasses import replace as _replace

        return _replace(self, **kw)


_FIELD_NAMES = {f.name for f in fields(ScenarioConfig)}


def _check(cond: bool, path: str, msg: str):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _coerce_top(key: str, value: Any) -> Any:
    if key in ("schedule", "inject_failures") and isinstance(value, list):
        return tuple(value)
    return value


def _build_section(section_cls, value: Any, path: str):
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    names = {f.name for f in fields(section_cls)}
    kwargs = {}
    for key, v in value.items():
        if key not in names:
            raise ConfigError(f"{path}.{key}: unknown field")
        if isinstance(v, list):
            v = tuple(v)
        kwargs[key] = v
    try:
        return section_cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def default_config(variant: str = VARIANT_HIT, seed: int = 0) -> ScenarioConfig:
    """Canonical configuration for a variant."""
    if variant not in VARIANT_ALIASES:
        raise ConfigError(f"variant: unknown {variant!r}")
    return ScenarioConfig(variant=VARIANT_ALIASES[variant], seed=seed).validate()


def figure_scenario(seed: int = 0, variant: str = VARIANT_HIT) -> ScenarioConfig:
    """Scripted trial: parts in the order {2, 3, 1, 4} with the first push
    on parts 2 and 3 forced to fail, exercising two recovery episodes.
    Push placement noise is off so exactly those failures occur."""
    return ScenarioConfig(
        variant=VARIANT_ALIASES[variant],
        seed=seed,
        schedule=("part2", "part3", "part1", "part4"),
        inject_failures=("part2", "part3"),
        control=ControlConfig(push_noise=0.0, push_tol=0.0),
    ).validate()
