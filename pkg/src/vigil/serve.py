"""WebSocket live server for the driver console.

One engine task owns the LiveSession and maps wall-clock time to virtual
milliseconds (scaled by --pace). At most one console client is accepted;
its inputs are stamped with the virtual time of receipt and queued to the
session, and state snapshots go back at 10 Hz alongside alerts as they
happen. A slow client loses the oldest queued updates rather than stalling
the engine. If the console directory (index.html + dist/) is present next
to the package or in the working directory it is served over HTTP on the
same port.

Wire protocol (one JSON document per text message):
  client -> server: {"type":"input","eyes":"open"|"closed"}
                    {"type":"input","alcohol_ppm":N}
                    {"type":"reset"}
  server -> client: {"type":"state","t_ms":N,"phase":S,"speed":N,
                     "alarm":B,"red":B,"green":B,"vibration":B}
                    {"type":"alert","seq":N,"code":S,"detail":S}
"""

import asyncio
import collections
import json
import logging
import socket
import sys
import time
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from .channel import ChannelConfig
from .controller import ControllerConfig
from .live import LiveInput, LiveSession

log = logging.getLogger("vigil.serve")

_TICK_S = 0.02
_STATE_PERIOD_S = 0.1  # 10 Hz to the client
_CLIENT_QUEUE_LIMIT = 256


class _Client:
    """Outbound queue for one console; oldest messages drop under pressure."""

    def __init__(self) -> None:
        self.queue: "collections.deque[str]" = collections.deque(maxlen=_CLIENT_QUEUE_LIMIT)
        self.wakeup = asyncio.Event()

    def push(self, payload: dict) -> None:
        self.queue.append(json.dumps(payload, separators=(",", ":")))
        self.wakeup.set()

    def on_alert(self, payload: dict) -> None:
        self.push(payload)


class _Clock:
    def __init__(self, pace: float) -> None:
        self.pace = pace
        self.t0 = time.monotonic()

    def virtual_ms(self) -> int:
        return int((time.monotonic() - self.t0) * 1000.0 * self.pace)


def _console_dir() -> Optional[Path]:
    candidates = [
        Path.cwd() / "frontend",
        Path(__file__).resolve().parents[2] / "frontend",
    ]
    for c in candidates:
        if (c / "index.html").is_file():
            return c
    return None


def build_app(session: LiveSession, clock: _Clock):
    holder: dict = {"client": None}

    async def engine_loop() -> None:
        last_state_push = 0.0
        while True:
            await asyncio.sleep(_TICK_S)
            session.advance_to(clock.virtual_ms())
            now = time.monotonic()
            client = holder["client"]
            if client is not None and now - last_state_push >= _STATE_PERIOD_S:
                client.push(session.state_message())
                last_state_push = now

    @asynccontextmanager
    async def lifespan(app):
        task = asyncio.create_task(engine_loop())
        try:
            yield
        finally:
            task.cancel()

    app = FastAPI(lifespan=lifespan)

    @app.websocket("/ws")
    async def console_socket(ws: WebSocket) -> None:
        await ws.accept()
        if holder["client"] is not None:
            await ws.close(code=1013, reason="one console at a time")
            return
        client = _Client()
        holder["client"] = client
        session.attach_sink(client)
        client.push(session.state_message())
        log.info("console connected")

        async def sender() -> None:
            while True:
                while client.queue:
                    await ws.send_text(client.queue.popleft())
                client.wakeup.clear()
                await client.wakeup.wait()

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                _handle_client_message(session, clock, text)
        except WebSocketDisconnect:
            log.info("console disconnected; inputs freeze at last value")
        finally:
            send_task.cancel()
            session.detach_sink(client)
            holder["client"] = None

    console = _console_dir()
    if console is not None:
        app.mount("/", StaticFiles(directory=console, html=True), name="console")
    else:
        @app.get("/")
        async def index() -> HTMLResponse:
            return HTMLResponse(
                "<html><body><h1>vigil live mode</h1>"
                "<p>Console assets not built; connect a client to "
                "<code>/ws</code>.</p></body></html>")

    return app


def _handle_client_message(session: LiveSession, clock: _Clock, text: str) -> None:
    try:
        obj = json.loads(text)
        if not isinstance(obj, dict):
            raise ValueError("not an object")
    except ValueError:
        log.warning("ignoring malformed client message: %.80r", text)
        return
    at = clock.virtual_ms()
    kind = obj.get("type")
    if kind == "reset":
        session.submit(LiveInput(at=at, reset=True))
    elif kind == "input":
        if "eyes" in obj:
            if obj["eyes"] in ("open", "closed"):
                session.submit(LiveInput(at=at, eyes_closed=obj["eyes"] == "closed"))
            else:
                log.warning("ignoring bad eyes input: %r", obj["eyes"])
        if "alcohol_ppm" in obj:
            try:
                session.submit(LiveInput(at=at, alcohol_ppm=float(obj["alcohol_ppm"])))
            except (TypeError, ValueError):
                log.warning("ignoring bad alcohol input: %r", obj["alcohol_ppm"])
    else:
        log.warning("ignoring unknown client message type: %r", kind)


def serve_forever(host: str, port: int, pace: float,
                  controller_cfg: ControllerConfig,
                  channel_cfg: ChannelConfig) -> int:
    try:
        import uvicorn
    except ImportError:
        print("serve mode requires fastapi and uvicorn", file=sys.stderr)
        return 2

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        print(f"cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return 2
    finally:
        probe.close()

    session = LiveSession(controller_cfg, channel_cfg)
    app = build_app(session, _Clock(pace))
    config = uvicorn.Config(app, host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    print(f"live mode on ws://{host}:{port}/ws (pace {pace:g}x), Ctrl-C to stop")
    try:
        server.run()
    except KeyboardInterrupt:
        pass
    return 0
