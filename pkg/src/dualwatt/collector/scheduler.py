"""Scrape scheduling over meter and telemetry targets.

Two drivers share the same per-target polling and bookkeeping:

* :meth:`ScrapeScheduler.run` polls in real time, one thread per target on an
  absolute tick grid, so a slow or failing target never delays the others;
* :meth:`ScrapeScheduler.run_virtual` walks a simulated clock deterministically,
  which is what experiment runs use to go faster than wall time.
"""

from __future__ import annotations

import heapq
import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Literal, Mapping

import httpx

from ..meterwire import DEFAULT_TIMEOUT, MeterClient
from .exposition import parse_exposition
from .series import HARDWARE, RawSample

log = logging.getLogger(__name__)

DEGRADED_AFTER = 3


@dataclass(frozen=True)
class ScrapeTarget:
    name: str
    kind: Literal["meter", "telemetry"]
    endpoint: str | Callable[[], str]
    interval: float = 1.0
    channel_map: Mapping[int, str] | None = None
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError(f"target {self.name}: interval must be positive")
        if self.kind == "meter":
            if not isinstance(self.endpoint, str) or not self.channel_map:
                raise ValueError(f"meter target {self.name} needs a URL and a channel map")
        elif self.kind == "telemetry":
            if not (callable(self.endpoint) or isinstance(self.endpoint, str)):
                raise ValueError(f"telemetry target {self.name} needs a handle or URL")
        else:
            raise ValueError(f"unknown target kind {self.kind!r}")


@dataclass
class TargetStatus:
    polls: int = 0
    failures: int = 0
    consecutive_failures: int = 0
    last_error: str | None = None
    max_jitter: float = 0.0

    @property
    def degraded(self) -> bool:
        return self.consecutive_failures >= DEGRADED_AFTER


@dataclass
class SimClock:
    """Settable clock reporting unix seconds ``epoch + t``."""

    epoch: float
    t: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __call__(self) -> float:
        with self._lock:
            return self.epoch + self.t

    def set(self, t: float) -> None:
        with self._lock:
            self.t = t


class _Poller:
    def __init__(self, target: ScrapeTarget):
        self.target = target
        self._meter: MeterClient | None = None
        self._http: httpx.Client | None = None
        if target.kind == "meter":
            self._meter = MeterClient(target.endpoint, target.channel_map, timeout=target.timeout)

    def __call__(self) -> list[RawSample]:
        t = self.target
        if self._meter is not None:
            return [
                RawSample(s.node_id, HARDWARE, s.timestamp, s.power, t.name) for s in self._meter.poll()
            ]
        if callable(t.endpoint):
            text = t.endpoint()
        else:
            if self._http is None:
                self._http = httpx.Client(timeout=t.timeout, trust_env=False)
            resp = self._http.get(t.endpoint)
            resp.raise_for_status()
            text = resp.text
        return [s.to_raw(t.name) for s in parse_exposition(text)]

    def close(self) -> None:
        if self._meter is not None:
            self._meter.close()
        if self._http is not None:
            self._http.close()


class ScrapeScheduler:
    def __init__(self, targets: list[ScrapeTarget]):
        names = [t.name for t in targets]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate target names in {names}")
        self.targets = list(targets)
        self.status = {t.name: TargetStatus() for t in targets}
        self._pollers = {t.name: _Poller(t) for t in targets}
        self._status_lock = threading.Lock()

    def scrape(self, target: ScrapeTarget) -> list[RawSample]:
        """Poll once; failures are recorded and swallowed (retried next tick)."""
        st = self.status[target.name]
        try:
            samples = self._pollers[target.name]()
        except Exception as exc:  # any target fault must stay isolated
            with self._status_lock:
                st.polls += 1
                st.failures += 1
                st.consecutive_failures += 1
                st.last_error = f"{type(exc).__name__}: {exc}"
            log.warning("scrape of %s failed (%d in a row): %s", target.name, st.consecutive_failures, exc)
            return []
        with self._status_lock:
            st.polls += 1
            st.consecutive_failures = 0
        return samples

    def degraded(self) -> list[str]:
        return [name for name, st in self.status.items() if st.degraded]

    # real time ------------------------------------------------------------

    def _loop(self, target: ScrapeTarget, stop: threading.Event, sink: Callable[[RawSample], None], start: float):
        k = 0
        st = self.status[target.name]
        while True:
            due = start + k * target.interval
            if stop.wait(max(0.0, due - time.monotonic())):
                return
            jitter = time.monotonic() - due
            with self._status_lock:
                st.max_jitter = max(st.max_jitter, jitter)
            for s in self.scrape(target):
                sink(s)
            k += 1
            now = time.monotonic()
            if now > start + k * target.interval:
                skip_to = int((now - start) / target.interval) + 1
                log.warning("%s overran its interval, skipping %d tick(s)", target.name, skip_to - k)
                k = skip_to

    def run(self, stop: threading.Event, sink: Callable[[RawSample], None]) -> None:
        """Block until ``stop`` is set, feeding every sample to ``sink``."""
        start = time.monotonic()
        threads = [
            threading.Thread(target=self._loop, args=(t, stop, sink, start), name=f"scrape:{t.name}", daemon=True)
            for t in self.targets
        ]
        for th in threads:
            th.start()
        for th in threads:
            th.join()

    # simulated time -------------------------------------------------------

    def run_virtual(
        self,
        clock: SimClock,
        until: float,
        before_tick: Callable[[float], None] | None = None,
    ) -> Iterator[RawSample]:
        """Poll every target at ``k * interval`` for simulated ``t < until``."""
        heap = [(0.0, i) for i in range(len(self.targets))]
        ticks = [0] * len(self.targets)
        heapq.heapify(heap)
        while heap:
            t, i = heapq.heappop(heap)
            if t >= until - 1e-9:
                continue
            clock.set(t)
            if before_tick is not None:
                before_tick(t)
            yield from self.scrape(self.targets[i])
            ticks[i] += 1
            heapq.heappush(heap, (ticks[i] * self.targets[i].interval, i))

    def close(self) -> None:
        for p in self._pollers.values():
            p.close()

    def __enter__(self) -> ScrapeScheduler:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def schedule_scrapes(targets: list[ScrapeTarget], stop: threading.Event) -> Iterator[RawSample]:
    """Stream raw samples from all targets at their intervals until ``stop`` is set."""
    q: queue.Queue[RawSample] = queue.Queue()
    sched = ScrapeScheduler(targets)
    worker = threading.Thread(target=sched.run, args=(stop, q.put), name="scrape-scheduler", daemon=True)
    worker.start()
    try:
        while worker.is_alive() or not q.empty():
            try:
                yield q.get(timeout=0.05)
            except queue.Empty:
                continue
    finally:
        stop.set()
        worker.join()
        sched.close()
