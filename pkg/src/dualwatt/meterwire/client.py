from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping
from urllib.parse import urlsplit

import httpx

from .document import MeterTransportError, SchemaViolation, parse_meter_status
from .service import STATUS_PATH

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 2.0


@dataclass(frozen=True)
class MeterSample:
    node_id: str
    timestamp: int  # meter clock, unix ms
    power: float
    cumulative_energy: float  # Wh

    def __post_init__(self):
        if self.power < 0:
            raise ValueError(f"negative power {self.power} for {self.node_id}")


def status_url(endpoint: str) -> str:
    parts = urlsplit(endpoint)
    if parts.path in ("", "/"):
        return endpoint.rstrip("/") + STATUS_PATH
    return endpoint


class MeterClient:
    """Keeps one HTTP connection per endpoint and remembers the last counters."""

    def __init__(
        self,
        endpoint: str,
        channel_map: Mapping[int, str],
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = 0,
        client: httpx.Client | None = None,
    ):
        self.url = status_url(endpoint)
        self.channel_map = dict(channel_map)
        self.timeout = timeout
        self.retries = retries
        self._own_client = client is None
        self._client = client or httpx.Client(timeout=timeout, trust_env=False)
        self._last_energy: dict[str, float] = {}

    def fetch(self) -> bytes:
        attempts = self.retries + 1
        last_exc: BaseException | None = None
        for _ in range(attempts):
            try:
                resp = self._client.get(self.url, timeout=self.timeout)
                resp.raise_for_status()
                return resp.content
            except httpx.HTTPError as exc:
                last_exc = exc
        raise MeterTransportError(self.url, attempts, self.timeout, last_exc)

    def poll(self) -> list[MeterSample]:
        status = parse_meter_status(self.fetch())
        samples = []
        for cid, node in self.channel_map.items():
            try:
                ch = status.channel(cid)
            except KeyError:
                raise SchemaViolation(f"channel {cid} ({node}) not reported by {status.device_name}") from None
            prev = self._last_energy.get(node)
            if prev is not None and ch.energy < prev:
                log.warning("energy counter of %s went backwards: %s -> %s Wh", node, prev, ch.energy)
            self._last_energy[node] = ch.energy
            samples.append(MeterSample(node, status.meter_time, ch.load, ch.energy))
        return samples

    def close(self) -> None:
        if self._own_client:
            self._client.close()

    def __enter__(self) -> MeterClient:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def poll_meter(
    endpoint: str,
    channel_map: Mapping[int, str],
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = 0,
) -> list[MeterSample]:
    """One-shot poll: one sample per mapped channel, stamped with the meter clock."""
    with MeterClient(endpoint, channel_map, timeout=timeout, retries=retries) as client:
        return client.poll()
