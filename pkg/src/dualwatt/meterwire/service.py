"""Mock smart power socket served over HTTP.

Each request reads the attached power trace at request time and advances
per-channel cumulative energy with the trapezoidal rule.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping

import uvicorn
from fastapi import FastAPI
from fastapi.responses import Response

from .document import MeterBindError, MeterStatus, OutputChannel, encode_meter_status

log = logging.getLogger(__name__)

STATUS_PATH = "/netio.json"

# (channel_id, clock seconds) -> watts, or None once the trace is exhausted
PowerTrace = Callable[[int, float], "float | None"]


@dataclass(frozen=True)
class MockMeterConfig:
    channels: Mapping[int, str]
    device_name: str = "PowerPDU-4KS-mock"
    voltage: float = 230.0
    frequency: float = 50.0
    power_factor: float = 0.95
    host: str = "127.0.0.1"
    port: int = 0
    energy_decimals: int = 3

    def __post_init__(self):
        if not self.channels:
            raise ValueError("mock meter needs at least one channel")
        if any(cid < 1 for cid in self.channels):
            raise ValueError("channel ids start at 1")


class MockMeter:
    """Thread-safe meter state: trace lookup plus energy accumulators."""

    def __init__(self, config: MockMeterConfig, trace: PowerTrace, clock: Callable[[], float] = time.time):
        self.config = config
        self.trace = trace
        self.clock = clock
        self._lock = threading.Lock()
        self._energy_wh = {cid: 0.0 for cid in config.channels}
        self._last: dict[int, tuple[float, float]] = {}

    def read(self) -> MeterStatus:
        cfg = self.config
        with self._lock:
            now = self.clock()
            outputs = []
            for cid, name in sorted(cfg.channels.items()):
                watts = self.trace(cid, now)
                on = watts is not None
                p = max(float(watts), 0.0) if on else 0.0
                prev = self._last.get(cid)
                if prev is not None and now > prev[0]:
                    self._energy_wh[cid] += 0.5 * (prev[1] + p) * (now - prev[0]) / 3600.0
                if prev is None or now >= prev[0]:
                    self._last[cid] = (now, p)
                current_ma = p / (cfg.voltage * cfg.power_factor) * 1000.0 if on else 0.0
                outputs.append(
                    OutputChannel(
                        id=cid,
                        name=name,
                        state=1 if on else 0,
                        load=p,
                        current=current_ma,
                        power_factor=cfg.power_factor if on else 0.0,
                        energy=round(self._energy_wh[cid], cfg.energy_decimals),
                    )
                )
            return MeterStatus(
                device_name=cfg.device_name,
                meter_time=int(round(now * 1000)),
                voltage=cfg.voltage,
                frequency=cfg.frequency,
                outputs=tuple(outputs),
            )

    def energy_wh(self, channel_id: int) -> float:
        with self._lock:
            return self._energy_wh[channel_id]


def create_app(meter: MockMeter) -> FastAPI:
    app = FastAPI(title="mock power meter", docs_url=None, redoc_url=None, openapi_url=None)

    @app.get(STATUS_PATH)
    def status() -> Response:
        return Response(content=encode_meter_status(meter.read()), media_type="application/json")

    return app


def bind_socket(host: str, port: int) -> socket.socket:
    # explicit IPPROTO_TCP: asyncio only enables TCP_NODELAY on sockets created that way
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM, socket.IPPROTO_TCP)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        raise MeterBindError(f"cannot bind {host}:{port}: {exc}") from exc
    sock.listen(128)
    sock.setblocking(False)
    return sock


class MeterServer:
    """Runs the mock meter app on a background thread.

    The socket is bound up front so that an occupied port surfaces as
    :class:`MeterBindError` in the caller instead of inside uvicorn.
    """

    def __init__(self, meter: MockMeter):
        self.meter = meter
        self._sock = bind_socket(meter.config.host, meter.config.port)
        self.host, self.port = self._sock.getsockname()[:2]
        config = uvicorn.Config(
            create_app(meter), log_level="warning", access_log=False, lifespan="off", timeout_keep_alive=30
        )
        self._server = uvicorn.Server(config)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}{STATUS_PATH}"

    def start(self, timeout: float = 10.0) -> MeterServer:
        self._thread = threading.Thread(
            target=self._server.run, kwargs={"sockets": [self._sock]}, name=f"mock-meter:{self.port}", daemon=True
        )
        self._thread.start()
        deadline = time.monotonic() + timeout
        while not self._server.started:
            if not self._thread.is_alive() or time.monotonic() > deadline:
                raise MeterBindError(f"mock meter on port {self.port} failed to start")
            time.sleep(0.005)
        log.debug("mock meter listening on %s", self.url)
        return self

    def serve_forever(self) -> None:
        """Blocking variant for the standalone command (handles SIGINT)."""
        self._server.run(sockets=[self._sock])

    def stop(self) -> None:
        self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=10)
        self._sock.close()

    def __enter__(self) -> MeterServer:
        return self if self._thread is not None else self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve_mock_meter(config: MockMeterConfig, trace: PowerTrace, clock: Callable[[], float] = time.time) -> MeterServer:
    """Start a mock meter in the background and return the running server."""
    return MeterServer(MockMeter(config, trace, clock)).start()


def constant_trace(watts: Mapping[int, float]) -> PowerTrace:
    def trace(channel_id: int, now: float) -> float | None:
        return watts.get(channel_id)

    return trace
