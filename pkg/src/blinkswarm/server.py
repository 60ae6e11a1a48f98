"""WebSocket state stream for the browser UI.

One JSON object per text frame, newline-terminated (NDJSON framing). Message
types: snapshot, command, query, query_result, error; every server message
carries `tick` and `run_id`. State commands go through the arena's ordered
queue and are drained at the next tick; malformed or unknown-target commands
are answered immediately with an error message. Flow commands (pause, resume,
step) act on the tick loop itself.

The arena is owned by the single asyncio loop; WebSocket handlers and the
tick task interleave cooperatively, so no locking is needed.
"""

from __future__ import annotations

import asyncio
import json
import os
from contextlib import asynccontextmanager
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .observer import UnknownDropletError, query_droplet
from .sim import ARENA_OPS, Arena, FLOW_OPS


class SimServer:
    def __init__(self, arena: Arena, run_id: str, tick_interval: float = 0.1):
        self.arena = arena
        self.run_id = run_id
        self.tick_interval = tick_interval
        self.paused = False
        self.clients: set[asyncio.Queue] = set()
        self._task: asyncio.Task | None = None

    # ------------------------------------------------------------- messages

    def _msg(self, msg_type: str, **payload: Any) -> str:
        body = {"type": msg_type, "tick": self.arena.tick_count, "run_id": self.run_id}
        body.update(payload)
        return json.dumps(body, sort_keys=True) + "\n"

    def snapshot_message(self) -> str:
        return self._msg("snapshot", data=self.arena.snapshot())

    def _broadcast(self, message: str) -> None:
        for queue in self.clients:
            if queue.full():
                try:
                    queue.get_nowait()  # drop the oldest; clients want latest state
                except asyncio.QueueEmpty:
                    pass
            queue.put_nowait(message)

    # ------------------------------------------------------------- tick loop

    async def run(self) -> None:
        while True:
            if not self.paused:
                self.arena.tick()
                self._broadcast(self.snapshot_message())
            await asyncio.sleep(self.tick_interval)

    def start(self) -> None:
        self._task = asyncio.get_running_loop().create_task(self.run())

    async def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass

    def step(self, k: int) -> None:
        for _ in range(max(0, k)):
            self.arena.tick()
        self._broadcast(self.snapshot_message())

    # ------------------------------------------------------------- inbound

    def handle_message(self, raw: str) -> str | None:
        """Process one client message; returns an immediate reply or None."""
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            return self._msg("error", code="bad_json", message="message is not valid JSON")
        msg_type = msg.get("type")
        if msg_type == "query":
            try:
                info = query_droplet(self.arena, int(msg.get("droplet_id", -1)))
            except (UnknownDropletError, TypeError, ValueError):
                return self._msg(
                    "error", code="not_found",
                    message=f"no droplet with id {msg.get('droplet_id')!r}",
                )
            return self._msg("query_result", droplet_id=info["id"], info=info)
        if msg_type == "command":
            cmd = msg.get("cmd")
            if not isinstance(cmd, dict) or "op" not in cmd:
                return self._msg("error", code="bad_command", message="cmd must carry an op")
            op = cmd["op"]
            if op in FLOW_OPS:
                if op == "pause":
                    self.paused = True
                elif op == "resume":
                    self.paused = False
                else:
                    try:
                        self.step(int(cmd.get("k", 1)))
                    except (TypeError, ValueError):
                        return self._msg("error", code="bad_command", message="step needs integer k")
                return None
            if op not in ARENA_OPS:
                return self._msg("error", code="bad_command", message=f"unknown op {op!r}")
            problem = self._validate_command(cmd)
            if problem:
                return self._msg("error", code="rejected", message=problem)
            self.arena.queue_command(cmd)
            return None
        return self._msg("error", code="bad_type", message=f"unknown message type {msg_type!r}")

    def _validate_command(self, cmd: dict[str, Any]) -> str | None:
        arena = self.arena
        op = cmd["op"]
        try:
            if op == "add_atom":
                if cmd["symbol"] not in arena.table.elements:
                    return f"unknown element {cmd['symbol']!r}"
                if not arena._in_bounds(float(cmd["x"]), float(cmd["y"])):
                    return "position outside arena"
            elif op in ("remove_droplet", "steer"):
                if int(cmd["id"]) not in arena.droplets:
                    return f"no droplet with id {cmd['id']}"
                if op == "steer" and not arena._in_bounds(float(cmd["x"]), float(cmd["y"])):
                    return "steer target outside arena"
            elif op == "break_molecule":
                if int(cmd["group_id"]) not in arena.groups:
                    return f"no molecule group with id {cmd['group_id']}"
        except (KeyError, TypeError, ValueError) as exc:
            return f"malformed {op} command: {exc}"
        return None


def create_app(
    arena: Arena,
    run_id: str,
    tick_interval: float = 0.1,
    static_dir: str | None = None,
) -> FastAPI:
    server = SimServer(arena, run_id, tick_interval)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        server.start()
        try:
            yield
        finally:
            await server.stop()

    app = FastAPI(title="blinkswarm state stream", lifespan=lifespan)
    app.state.sim = server

    @app.get("/healthz")
    def healthz() -> dict[str, Any]:
        return {"ok": True, "run_id": server.run_id, "tick": server.arena.tick_count}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=32)
        server.clients.add(queue)
        await ws.send_text(server.snapshot_message())

        async def sender() -> None:
            while True:
                await ws.send_text(await queue.get())

        send_task = asyncio.get_running_loop().create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                reply = server.handle_message(raw)
                if reply is not None:
                    await ws.send_text(reply)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            server.clients.discard(queue)

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
