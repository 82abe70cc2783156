"""Live steering server: sessions, mid-run parameter mutation and ordered
frame streams over length-prefixed JSON.

A session owns one engine and a single driver task; mutations are queued and
drained only between frame chunks, so every emitted frame is consistent with
exactly one parameter epoch.  Subscribers receive frames in step order with
a bounded replay buffer; a reconnect beyond the window restarts the stream
from a flagged keyframe.  Escape-grid sessions re-render on mutation: a hot
patch bumps the epoch, cancels in-flight tiles and starts a new render pass.

Run with ``python -m dynlab.server [--host H] [--port P] [--config FILE]``;
environment overrides LAB_SERVER_HOST / LAB_SERVER_PORT apply on top of the
config file.
"""

from __future__ import annotations

import argparse
import asyncio
import itertools
import json
import os
import threading
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .engines import EngineFailure, EscapeEngine, make_engine
from .protocol import PROTO_VERSION, FrameDecoder, encode_message
from .schema import EXPERIMENTS, SchemaError, registry_dump, validate_params

DEFAULT_CONFIG = {
    "host": "127.0.0.1",
    "port": 8765,
    "replay_buffer": 512,
    "max_sessions": 256,
    "run_pace_seconds": 1.0 / 30.0,
}


def load_config(path: str | Path | None = None) -> dict[str, Any]:
    config = dict(DEFAULT_CONFIG)
    env_path = os.environ.get("LAB_SERVER_CONFIG")
    chosen = path or env_path
    if chosen:
        config.update(json.loads(Path(chosen).read_text()))
    if "LAB_SERVER_HOST" in os.environ:
        config["host"] = os.environ["LAB_SERVER_HOST"]
    if "LAB_SERVER_PORT" in os.environ:
        config["port"] = int(os.environ["LAB_SERVER_PORT"])
    return config


@dataclass
class Session:
    id: str
    experiment: str
    engine: Any
    params: dict[str, Any]
    steps_per_frame: int
    replay_limit: int
    status: str = "paused"            # running | paused | failed | closed
    step_count: int = 0
    param_epoch: int = 0
    failure: str | None = None
    pending_patches: deque = field(default_factory=deque)
    replay: deque = field(default_factory=deque)
    evicted_step: int = -1            # highest step dropped from the buffer
    subscribers: dict[int, asyncio.Queue] = field(default_factory=dict)
    driver: asyncio.Task | None = None
    wake: asyncio.Event = field(default_factory=asyncio.Event)
    render_epoch: int = 0             # escape engines: epoch being rendered

    def snapshot(self) -> dict[str, Any]:
        return {"id": self.id, "experiment": self.experiment,
                "params": self.params, "status": self.status,
                "step_count": self.step_count,
                "param_epoch": self.param_epoch}


class LabServer:
    """All sessions plus the TCP front end."""

    def __init__(self, config: dict[str, Any] | None = None):
        self.config = dict(DEFAULT_CONFIG)
        if config:
            self.config.update(config)
        self.sessions: dict[str, Session] = {}
        self._sub_ids = itertools.count(1)

    # -- session lifecycle ---------------------------------------------------

    def create_session(self, experiment: str, params: dict[str, Any],
                       seed: int = 0,
                       steps_per_frame: int | None = None) -> Session:
        if len(self.sessions) >= self.config["max_sessions"]:
            raise CapacityError("session capacity exceeded; retry later")
        full = validate_params(experiment, params)
        engine = make_engine(experiment, full, seed)
        session = Session(
            id=uuid.uuid4().hex,
            experiment=experiment,
            engine=engine,
            params=full,
            steps_per_frame=steps_per_frame or getattr(
                engine, "steps_per_frame", 100),
            replay_limit=self.config["replay_buffer"],
        )
        self.sessions[session.id] = session
        if isinstance(engine, EscapeEngine):
            session.driver = asyncio.create_task(self._render_pass(session))
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise SchemaError(f"unknown session {session_id!r}")
        return session

    async def close_session(self, session_id: str):
        session = self.get(session_id)
        session.status = "closed"
        session.wake.set()
        if session.driver is not None:
            session.driver.cancel()
            try:
                await session.driver
            except (asyncio.CancelledError, Exception):
                pass
        for queue in session.subscribers.values():
            queue.put_nowait(None)
        session.subscribers.clear()
        session.replay.clear()
        del self.sessions[session_id]

    # -- frames ----------------------------------------------------------------

    def _emit(self, session: Session, kind: str, payload: dict[str, Any],
              keyframe: bool = False):
        frame = {
            "type": "frame",
            "session": session.id,
            "step": session.step_count,
            "kind": kind,
            "param_epoch": session.param_epoch,
            "keyframe": keyframe,
            "payload": payload,
        }
        session.replay.append(frame)
        while len(session.replay) > session.replay_limit:
            dropped = session.replay.popleft()
            session.evicted_step = max(session.evicted_step, dropped["step"])
        for queue in session.subscribers.values():
            queue.put_nowait(frame)

    def _drain_patches(self, session: Session):
        transient = getattr(session.engine, "transient_keys", frozenset())
        while session.pending_patches:
            patch = session.pending_patches.popleft()
            session.engine.apply(patch)
            session.params.update(
                {k: v for k, v in patch.items() if k not in transient})
            session.param_epoch += 1

    def _advance_chunk(self, session: Session, n: int):
        self._drain_patches(session)
        payload = session.engine.advance(n)
        session.step_count += n
        self._emit(session, session.engine.kind, payload)

    # -- stepped-session driver -------------------------------------------------

    async def _run_loop(self, session: Session):
        pace = self.config["run_pace_seconds"]
        try:
            while session.status == "running":
                self._advance_chunk(session, session.steps_per_frame)
                await asyncio.sleep(pace)
        except Exception as err:
            if session.status != "closed":
                session.status = "failed"
                session.failure = str(err)
        finally:
            if session.status == "running":
                session.status = "paused"

    # -- escape-session driver ---------------------------------------------------

    async def _render_pass(self, session: Session):
        """Render every tile of the current epoch, dropping out the moment a
        newer epoch supersedes this pass."""
        epoch = session.param_epoch
        session.render_epoch = epoch
        # Stale-epoch tiles never reach clients: the buffer only ever holds
        # the pass being rendered.
        session.replay.clear()
        session.evicted_step = -1
        try:
            for payload in session.engine.render_tiles_iter():
                if session.param_epoch != epoch or session.status == "closed":
                    return  # stale pass: drop remaining tiles server-side
                session.step_count += 1
                self._emit(session, session.engine.kind, payload)
                await asyncio.sleep(0)
        except Exception as err:
            if session.status != "closed":
                session.status = "failed"
                session.failure = str(err)

    def _restart_render(self, session: Session):
        if session.driver is not None:
            session.driver.cancel()
        session.driver = asyncio.create_task(self._render_pass(session))

    # -- request handlers ----------------------------------------------------------

    async def handle_update(self, session: Session,
                            patch: dict[str, Any]) -> dict[str, Any]:
        if session.status in ("failed", "closed"):
            raise SchemaError(f"session is {session.status}: "
                              f"{session.failure or ''}")
        spec = EXPERIMENTS[session.experiment]
        validated = validate_params(session.experiment, patch, partial=True)
        cold = [k for k in validated if not spec.param(k).hot]
        if cold:
            raise ProtocolRestartRequired(
                f"parameters {cold} are fixed at session creation; "
                f"create a new session to change them")
        # Engine-level feasibility (stability guards etc.) is checked before
        # anything is queued, so a bad value leaves the session untouched.
        check = getattr(session.engine, "validate_patch", None)
        if check is not None:
            try:
                check(validated)
            except Exception as err:
                raise SchemaError(f"patch rejected: {err}") from err
        if isinstance(session.engine, EscapeEngine):
            session.engine.apply(validated)
            session.params.update(validated)
            session.param_epoch += 1
            self._restart_render(session)
        else:
            session.pending_patches.append(validated)
            if session.status != "running":
                self._drain_patches(session)
        return {"param_epoch": session.param_epoch
                + len(session.pending_patches)}

    async def handle_control(self, session: Session, action: str,
                             n: int | None) -> dict[str, Any]:
        if session.status == "failed":
            raise SchemaError(f"session failed: {session.failure}")
        if session.status == "closed":
            raise SchemaError("session is closed")
        if isinstance(session.engine, EscapeEngine):
            # Render-on-mutation sessions have no stepping semantics.
            return session.snapshot()
        if action == "pause":
            if session.status == "running":
                session.status = "paused"
                if session.driver is not None:
                    await session.driver
                    session.driver = None
        elif action == "run":
            if session.status != "running":
                session.status = "running"
                session.driver = asyncio.create_task(self._run_loop(session))
        elif action == "step":
            if session.status == "running":
                raise SchemaError("pause the session before stepping")
            count = int(n or 0)
            if count < 0:
                raise SchemaError("step count must be >= 0")
            try:
                remaining = count
                while remaining > 0:
                    chunk = min(remaining, session.steps_per_frame)
                    self._advance_chunk(session, chunk)
                    remaining -= chunk
                    await asyncio.sleep(0)
            except Exception as err:
                session.status = "failed"
                session.failure = str(err)
                raise SchemaError(f"step failed: {err}") from err
        else:
            raise SchemaError(f"unknown action {action!r}")
        return session.snapshot()

    def subscribe(self, session: Session,
                  from_step: int | None) -> tuple[int, asyncio.Queue,
                                                  list[dict[str, Any]]]:
        """Register a subscriber; returns backlog frames to send first.

        Within the replay window the backlog continues seamlessly past
        from_step (no gaps, no duplicates); once frames past from_step have
        been evicted, the stream restarts with a flagged keyframe instead.
        A missing from_step asks for everything still buffered.
        """
        queue: asyncio.Queue = asyncio.Queue()
        sub_id = next(self._sub_ids)
        if from_step is None:
            from_step = -1
        if session.evicted_step > from_step:
            backlog = [{
                "type": "frame",
                "session": session.id,
                "step": session.step_count,
                "kind": session.engine.kind,
                "param_epoch": session.param_epoch,
                "keyframe": True,
                "payload": session.engine.keyframe(),
            }]
        else:
            backlog = [f for f in session.replay if f["step"] > from_step]
        session.subscribers[sub_id] = queue
        return sub_id, queue, backlog

    def health(self) -> dict[str, Any]:
        by_status: dict[str, int] = {}
        for session in self.sessions.values():
            by_status[session.status] = by_status.get(session.status, 0) + 1
        return {"sessions": len(self.sessions), "by_status": by_status,
                "proto_version": PROTO_VERSION}


class ProtocolRestartRequired(SchemaError):
    pass


class CapacityError(RuntimeError):
    pass


# -- connection handling -----------------------------------------------------


async def _handle_connection(server: LabServer, reader: asyncio.StreamReader,
                             writer: asyncio.StreamWriter):
    decoder = FrameDecoder()
    send_lock = asyncio.Lock()
    pumps: list[asyncio.Task] = []
    my_subscriptions: list[tuple[Session, int]] = []

    async def send(message: dict[str, Any]):
        async with send_lock:
            writer.write(encode_message(message))
            await writer.drain()

    async def pump(queue: asyncio.Queue):
        while True:
            frame = await queue.get()
            if frame is None:
                return
            await send(frame)

    async def handle(message: dict[str, Any]):
        mid = message.get("id")
        mtype = message.get("type")
        try:
            if mtype == "create":
                session = server.create_session(
                    message.get("experiment", ""),
                    message.get("params") or {},
                    seed=int(message.get("seed", 0)),
                    steps_per_frame=message.get("steps_per_frame"),
                )
                await send({"reply_to": mid, "type": "created",
                            "proto_version": PROTO_VERSION,
                            "session": session.snapshot()})
            elif mtype == "update":
                session = server.get(message.get("session", ""))
                ack = await server.handle_update(session,
                                                 message.get("patch") or {})
                await send({"reply_to": mid, "type": "ack",
                            "proto_version": PROTO_VERSION, **ack})
            elif mtype == "control":
                session = server.get(message.get("session", ""))
                snap = await server.handle_control(session,
                                                   message.get("action", ""),
                                                   message.get("n"))
                await send({"reply_to": mid, "type": "status",
                            "proto_version": PROTO_VERSION, "session": snap})
            elif mtype == "subscribe":
                session = server.get(message.get("session", ""))
                sub_id, queue, backlog = server.subscribe(
                    session, message.get("from_step"))
                my_subscriptions.append((session, sub_id))
                await send({"reply_to": mid, "type": "subscribed",
                            "proto_version": PROTO_VERSION,
                            "session": session.snapshot()})
                for frame in backlog:
                    await send(frame)
                pumps.append(asyncio.create_task(pump(queue)))
            elif mtype == "close":
                await server.close_session(message.get("session", ""))
                await send({"reply_to": mid, "type": "closed",
                            "proto_version": PROTO_VERSION})
            elif mtype == "health":
                await send({"reply_to": mid, "type": "health",
                            **server.health()})
            elif mtype == "schema":
                await send({"reply_to": mid, "type": "schema",
                            "proto_version": PROTO_VERSION,
                            "experiments": registry_dump()})
            else:
                raise SchemaError(f"unknown message type {mtype!r}")
        except ProtocolRestartRequired as err:
            await send({"reply_to": mid, "type": "error",
                        "code": "restart-required", "message": str(err),
                        "proto_version": PROTO_VERSION})
        except CapacityError as err:
            await send({"reply_to": mid, "type": "error",
                        "code": "retry-after", "message": str(err),
                        "retry_after_seconds": 1.0,
                        "proto_version": PROTO_VERSION})
        except SchemaError as err:
            await send({"reply_to": mid, "type": "error",
                        "code": "validation", "message": str(err),
                        "field": err.field,
                        "proto_version": PROTO_VERSION})
        except EngineFailure as err:
            await send({"reply_to": mid, "type": "error", "code": "failed",
                        "message": str(err), "proto_version": PROTO_VERSION})

    try:
        while True:
            data = await reader.read(65536)
            if not data:
                break
            for message in decoder.feed(data):
                await handle(message)
    except (ConnectionResetError, asyncio.IncompleteReadError, ValueError):
        pass
    finally:
        for session, sub_id in my_subscriptions:
            session.subscribers.pop(sub_id, None)
        for task in pumps:
            task.cancel()
        writer.close()
        try:
            await writer.wait_closed()
        except (ConnectionResetError, BrokenPipeError, OSError):
            pass


async def serve(config: dict[str, Any] | None = None):
    """Run the server until cancelled; returns the asyncio server object via
    the started event for embedding."""
    server = LabServer(config)
    tcp = await asyncio.start_server(
        lambda r, w: _handle_connection(server, r, w),
        server.config["host"], server.config["port"])
    return server, tcp


class ServerHandle:
    """Background-thread server for tests and embedding."""

    def __init__(self, config: dict[str, Any] | None = None):
        self._loop = asyncio.new_event_loop()
        self._started = threading.Event()
        self.host: str = ""
        self.port: int = 0
        self.server: LabServer | None = None
        self._thread = threading.Thread(target=self._run, args=(config,),
                                        daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=10):
            raise RuntimeError("server failed to start")

    def _run(self, config):
        asyncio.set_event_loop(self._loop)

        async def boot():
            self.server, self._tcp = await serve(config)
            sock = self._tcp.sockets[0]
            self.host, self.port = sock.getsockname()[:2]
            self._started.set()

        self._loop.run_until_complete(boot())
        self._loop.run_forever()

    def stop(self):
        def _shutdown():
            self._tcp.close()
            self._loop.stop()

        self._loop.call_soon_threadsafe(_shutdown)
        self._thread.join(timeout=5)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m dynlab.server",
        description="Live experiment steering server.")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--config", type=Path, default=None)
    args = parser.parse_args(argv)
    config = load_config(args.config)
    if args.host is not None:
        config["host"] = args.host
    if args.port is not None:
        config["port"] = args.port

    async def run():
        _, tcp = await serve(config)
        sock = tcp.sockets[0]
        host, port = sock.getsockname()[:2]
        print(f"listening {host} {port}", flush=True)
        async with tcp:
            await tcp.serve_forever()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
