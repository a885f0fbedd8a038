"""Live session service: one WebSocket client drives one simulation.

The client is the operator's wrist: it streams cursor observations at the
camera rate and each observation advances the session exactly one tick, so
the simulation clock follows the client and pauses whenever the client goes
silent. A pressed cursor maps to a guidance pull on the effector. Messages
are JSON text frames:

  client -> server
    {"type": "hello", "schema_version": 1}
    {"type": "obs", "t": <s>, "x": <m>, "y": <m>, "pressed": <bool>}
    {"type": "cmd", "cmd": "reset" | "pause" | "set_param",
     "param": "<section.field>", "value": <number>}   (set_param only)

  server -> client
    {"type": "config", "schema_version": 1, "config": {...},
     "labels": {"task": [...], "interactive": [...]}}
    {"type": "state", "t", "mode", "post1", "post2", "ee", "queues",
     "assemblies"}        (one per tick, >= 5 Hz under a 30 Hz stream)
    {"type": "event", "tag": <str>, "t": <s>}
    {"type": "error", "message": <str>}   (followed by session close)

A malformed or out-of-protocol message produces an error frame and closes
the session. Parameter changes are staged and applied on the next reset so
a running trial's log stays comparable. Sessions are independent: every
connection gets its own world, trackers, and generator streams.
"""

from __future__ import annotations

import asyncio
import json
import logging
from typing import Any, Optional

import numpy as np

from .config import SCHEMA_VERSION, ScenarioConfig
from .errors import ConfigError
from .filtering import INTERACTIVE_LABELS, TASK_LABELS
from .runner import _rngs, build_trackers, cursor_pull, sample_schedule
from .triallog import record_to_dict
from .world import TickRecord, build_world, world_step

log = logging.getLogger(__name__)


def state_frame(rec: TickRecord) -> dict[str, Any]:
    d = record_to_dict(rec)
    return {
        "type": "state",
        "t": d["t"],
        "mode": d["mode"],
        "post1": d["post1"],
        "post2": d["post2"],
        "ee": d["ee"],
        "queues": d["queues"],
        "assemblies": d["assemblies"],
    }


def encode(frame: dict[str, Any]) -> str:
    return json.dumps(frame, sort_keys=True)


class SessionError(Exception):
    """Protocol violation; the message is sent to the client before close."""


class Session:
    """One client's isolated simulation and tracker state."""

    def __init__(self, cfg: ScenarioConfig):
        self.base_cfg = cfg
        self.overrides: dict[str, Any] = {}
        self.paused = False
        self.last_t: Optional[float] = None
        self._build(cfg)

    def _build(self, cfg: ScenarioConfig):
        self.cfg = cfg.validate()
        self.world_rng, tracker_rng = _rngs(cfg.seed)
        schedule = sample_schedule(cfg, self.world_rng)
        self.world = build_world(cfg, schedule)
        self.trackers = build_trackers(cfg, tracker_rng)
        self.last_t = None

    def hello_frame(self) -> dict[str, Any]:
        return {
            "type": "config",
            "schema_version": SCHEMA_VERSION,
            "config": self.cfg.to_dict(),
            "labels": {"task": list(TASK_LABELS), "interactive": list(INTERACTIVE_LABELS)},
        }

    def reset(self):
        doc = self.base_cfg.to_dict()
        for path, value in self.overrides.items():
            section, _, field = path.partition(".")
            if not field or section not in doc or not isinstance(doc[section], dict) \
                    or field not in doc[section]:
                raise SessionError(f"set_param: unknown parameter {path!r}")
            doc[section][field] = value
        try:
            cfg = ScenarioConfig.from_dict(doc)
        except ConfigError as exc:
            raise SessionError(f"set_param: {exc}") from exc
        self._build(cfg)
        self.paused = False

    def stage_param(self, path: Any, value: Any):
        if not isinstance(path, str) or not isinstance(value, (int, float, bool)):
            raise SessionError("set_param needs a string param and a scalar value")
        self.overrides[path] = value

    def step(self, t: float, x: float, y: float, pressed: bool) -> tuple[dict, list[dict]]:
        if self.last_t is not None and t <= self.last_t:
            raise SessionError(f"observation timestamps must increase (got {t})")
        self.last_t = t
        cursor = np.array([float(x), float(y)])
        pull = cursor_pull(cursor, self.world, bool(pressed))
        rec = world_step(
            self.world, self.trackers, self.cfg.tracker.dt, self.world_rng, cursor, pull
        )
        events = [{"type": "event", "tag": tag, "t": rec.t} for tag in rec.events]
        return state_frame(rec), events


def _parse(message: str | bytes) -> dict[str, Any]:
    try:
        doc = json.loads(message)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SessionError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "type" not in doc:
        raise SessionError("messages must be objects with a 'type' field")
    return doc


async def handle_connection(websocket, cfg: ScenarioConfig):
    session = Session(cfg)
    try:
        raw = await websocket.recv()
        hello = _parse(raw)
        if hello.get("type") != "hello":
            raise SessionError("first message must be 'hello'")
        if hello.get("schema_version") != SCHEMA_VERSION:
            raise SessionError(
                f"schema_version mismatch: server speaks {SCHEMA_VERSION}"
            )
        await websocket.send(encode(session.hello_frame()))

        async for raw in websocket:
            msg = _parse(raw)
            kind = msg["type"]
            if kind == "obs":
                if session.paused:
                    continue  # paused: the session clock does not advance
                try:
                    t, x, y = float(msg["t"]), float(msg["x"]), float(msg["y"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise SessionError(f"bad obs fields: {exc}") from exc
                state, events = session.step(t, x, y, msg.get("pressed", False))
                await websocket.send(encode(state))
                for ev in events:
                    await websocket.send(encode(ev))
            elif kind == "cmd":
                cmd = msg.get("cmd")
                if cmd == "reset":
                    session.reset()
                    await websocket.send(encode(session.hello_frame()))
                elif cmd == "pause":
                    session.paused = not session.paused
                    await websocket.send(
                        encode({"type": "event", "tag": f"paused:{session.paused}",
                                "t": session.last_t or 0.0})
                    )
                elif cmd == "set_param":
                    session.stage_param(msg.get("param"), msg.get("value"))
                    await websocket.send(
                        encode({"type": "event", "tag": f"param-staged:{msg.get('param')}",
                                "t": session.last_t or 0.0})
                    )
                else:
                    raise SessionError(f"unknown cmd {cmd!r}")
            else:
                raise SessionError(f"unknown message type {kind!r}")
    except SessionError as exc:
        try:
            await websocket.send(encode({"type": "error", "message": str(exc)}))
        finally:
            await websocket.close(code=1002, reason="protocol error")
    except Exception:  # connection teardown races are expected
        log.debug("connection closed", exc_info=True)


async def serve_async(cfg: ScenarioConfig, port: int, host: str = "127.0.0.1"):
    """Start the server; returns the websockets server object."""
    from websockets.asyncio.server import serve as ws_serve

    async def handler(websocket):
        await handle_connection(websocket, cfg)

    return await ws_serve(handler, host, port)


def serve(cfg: ScenarioConfig, port: int, host: str = "127.0.0.1"):
    """Blocking entry point: serve sessions until interrupted."""

    async def main():
        server = await serve_async(cfg, port, host)
        log.info("live session service on ws://%s:%d", host, port)
        try:
            await asyncio.Future()
        finally:
            server.close()
            await server.wait_closed()

    asyncio.run(main())
