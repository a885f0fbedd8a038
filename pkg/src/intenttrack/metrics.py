"""Trial metrics: completion time, mode-segmented path lengths, guidance
effort, residual failures, and frame-wise tracking accuracy."""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import VARIANT_COEXIST, VARIANT_COOPERATE, VARIANT_HIT
from .filtering import COEXIST, COOPERATE, INTERACTIVE_LABELS, TASK_LABELS
from .triallog import TrialLog


@dataclass
class Metrics:
    completion_time: float
    automated_path: Optional[float]
    guided_path: Optional[float]
    mean_human_force: Optional[float]
    human_energy: Optional[float]
    n_failures: int
    low_frame_acc: Optional[float]
    high_frame_acc: Optional[float]

    def as_row(self) -> dict[str, Optional[float]]:
        return {
            "completion_time": self.completion_time,
            "automated_path": self.automated_path,
            "guided_path": self.guided_path,
            "human_force": self.mean_human_force,
            "human_energy": self.human_energy,
            "n_failures": float(self.n_failures),
            "low_frame_acc": self.low_frame_acc,
            "high_frame_acc": self.high_frame_acc,
        }


def _map_label(probs: np.ndarray, labels: Sequence[str]) -> str:
    return labels[int(np.argmax(probs))]


def frame_accuracy(log: TrialLog) -> tuple[Optional[float], Optional[float]]:
    """Fraction of ticks whose most likely intention matches ground truth,
    skipping ticks with blank ground truth at that level."""
    low_hits = low_total = high_hits = high_total = 0
    for r in log.records:
        if r.gt1 is not None and r.post1 is not None:
            low_total += 1
            low_hits += _map_label(r.post1, TASK_LABELS) == r.gt1
        if r.gt2 is not None and r.post2 is not None:
            high_total += 1
            high_hits += _map_label(r.post2, INTERACTIVE_LABELS) == r.gt2
    low = low_hits / low_total if low_total else None
    high = high_hits / high_total if high_total else None
    return low, high


def compute_metrics(log: TrialLog) -> Metrics:
    """Aggregate one trial log. Path lengths are polyline sums segmented by
    the mode that commanded each tick; energy integrates pull magnitude
    times effector displacement while guidance is engaged."""
    if not log.records:
        raise ValueError("truncated log: no tick records")
    automated = guided = energy = 0.0
    pulls = []
    prev = log.records[0]
    for r in log.records[1:]:
        seg = float(np.linalg.norm(r.ee - prev.ee))
        if r.mode == COOPERATE:
            guided += seg
        else:
            automated += seg
        energy += r.pull * seg
        prev = r
    for r in log.records:
        pulls.append(r.pull)

    last = log.records[-1]
    n_failures = sum(1 for s in last.assemblies.values() if s == "pushed-failed")
    low_acc, high_acc = frame_accuracy(log)

    variant = log.config.variant
    m = Metrics(
        completion_time=last.t,
        automated_path=automated,
        guided_path=guided,
        mean_human_force=float(np.mean(pulls)) if pulls else 0.0,
        human_energy=energy,
        n_failures=n_failures,
        low_frame_acc=low_acc,
        high_frame_acc=high_acc,
    )
    # Columns that do not apply to a variant are reported absent.
    if variant == VARIANT_COEXIST:
        m.guided_path = None
        m.mean_human_force = None
        m.human_energy = None
    elif variant == VARIANT_COOPERATE:
        m.automated_path = None
        m.low_frame_acc = None
        m.high_frame_acc = None
    return m


# ---------------------------------------------------------------------------
# Batch aggregation
# ---------------------------------------------------------------------------

METRIC_COLUMNS = (
    "completion_time",
    "automated_path",
    "guided_path",
    "human_force",
    "human_energy",
    "n_failures",
    "low_frame_acc",
    "high_frame_acc",
)


@dataclass
class VariantSummary:
    variant: str
    n: int
    mean: dict[str, Optional[float]]
    std: dict[str, Optional[float]]
    median: dict[str, Optional[float]]


def summarize(variant: str, rows: list[Metrics]) -> VariantSummary:
    mean: dict[str, Optional[float]] = {}
    std: dict[str, Optional[float]] = {}
    med: dict[str, Optional[float]] = {}
    for col in METRIC_COLUMNS:
        vals = [row.as_row()[col] for row in rows]
        vals = [v for v in vals if v is not None and math.isfinite(v)]
        if not vals:
            mean[col] = std[col] = med[col] = None
            continue
        mean[col] = statistics.fmean(vals)
        std[col] = statistics.stdev(vals) if len(vals) > 1 else 0.0
        med[col] = statistics.median(vals)
    return VariantSummary(variant, len(rows), mean, std, med)


def summaries_to_csv(summaries: list[VariantSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = ["system", "n"]
    for col in METRIC_COLUMNS:
        header += [f"{col}_mean", f"{col}_std"]
    writer.writerow(header)
    for s in summaries:
        row: list[str] = [s.variant, str(s.n)]
        for col in METRIC_COLUMNS:
            for val in (s.mean[col], s.std[col]):
                row.append("N/A" if val is None else f"{val:.6g}")
        writer.writerow(row)
    return buf.getvalue()


def trials_to_csv(variant: str, metrics: list[Metrics], seeds: list[int]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["system", "seed", *METRIC_COLUMNS])
    for seed, m in zip(seeds, metrics):
        row = [variant, str(seed)]
        for col in METRIC_COLUMNS:
            v = m.as_row()[col]
            row.append("N/A" if v is None else f"{v:.6g}")
        writer.writerow(row)
    return buf.getvalue()


def format_summary_table(summaries: list[VariantSummary]) -> str:
    """Fixed-width text table, one row per system."""
    cols = ["system"] + list(METRIC_COLUMNS)
    lines = ["  ".join(f"{c:>18}" for c in cols)]
    for s in summaries:
        cells = [f"{s.variant:>18}"]
        for col in METRIC_COLUMNS:
            m, sd = s.mean[col], s.std[col]
            cells.append(f"{'N/A':>18}" if m is None else f"{m:10.3f}±{sd:<7.3f}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
