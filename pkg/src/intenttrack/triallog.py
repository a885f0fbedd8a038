"""Trial logs: one header line plus one record per tick, as JSON lines.

The on-disk format is part of the package contract: field names and the
line layout are stable, and serialization is deterministic so equal trials
produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from .config import SCHEMA_VERSION, ScenarioConfig
from .world import TickRecord


@dataclass
class TrialLog:
    config: ScenarioConfig
    schedule: tuple[str, ...]
    records: list[TickRecord] = field(default_factory=list)
    completed: bool = False

    @property
    def duration(self) -> float:
        return self.records[-1].t if self.records else 0.0

    def header(self) -> dict[str, Any]:
        return {
            "type": "header",
            "schema_version": SCHEMA_VERSION,
            "variant": self.config.variant,
            "seed": self.config.seed,
            "schedule": list(self.schedule),
            "completed": self.completed,
            "config": self.config.to_dict(),
        }


def _xy(v: Optional[np.ndarray]) -> Optional[list[float]]:
    return None if v is None else [float(v[0]), float(v[1])]


def record_to_dict(r: TickRecord) -> dict[str, Any]:
    return {
        "t": float(r.t),
        "wrist": _xy(r.wrist),
        "raw": _xy(r.raw),
        "smoothed": _xy(r.smoothed),
        "ee": _xy(r.ee),
        "mode": r.mode,
        "post1": None if r.post1 is None else [float(p) for p in r.post1],
        "post2": None if r.post2 is None else [float(p) for p in r.post2],
        "pull": float(r.pull),
        "queues": r.queues,
        "assemblies": r.assemblies,
        "gt1": r.gt1,
        "gt2": r.gt2,
        "events": list(r.events),
    }


def record_from_dict(d: dict[str, Any]) -> TickRecord:
    arr = lambda v: None if v is None else np.asarray(v, dtype=float)
    return TickRecord(
        t=d["t"],
        wrist=arr(d["wrist"]),
        raw=arr(d["raw"]),
        smoothed=arr(d["smoothed"]),
        ee=arr(d["ee"]),
        mode=d["mode"],
        post1=arr(d["post1"]),
        post2=arr(d["post2"]),
        pull=d["pull"],
        queues=d["queues"],
        assemblies=d["assemblies"],
        gt1=d.get("gt1"),
        gt2=d.get("gt2"),
        events=d.get("events", []),
    )


def dump_lines(log: TrialLog) -> Iterable[str]:
    yield json.dumps(log.header(), sort_keys=True)
    for r in log.records:
        yield json.dumps(record_to_dict(r), sort_keys=True)


def write_log(log: TrialLog, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        for line in dump_lines(log):
            f.write(line + "\n")


def read_log(path: str | Path) -> TrialLog:
    with Path(path).open() as f:
        first = f.readline()
        if not first:
            raise ValueError(f"{path}: empty log")
        header = json.loads(first)
        if header.get("type") != "header":
            raise ValueError(f"{path}: missing header line")
        cfg = ScenarioConfig.from_dict(header["config"])
        log = TrialLog(cfg, tuple(header["schedule"]), completed=header.get("completed", False))
        for line in f:
            line = line.strip()
            if line:
                log.records.append(record_from_dict(json.loads(line)))
    return log
