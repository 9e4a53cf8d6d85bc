"""Software-side power estimation and attribution.

Host watts come from a package energy counter plus a constant floor for the
parts the counter does not see. Dynamic host power (above ``host_idle``) is
split across processes by CPU-time share; GPU board power, which is part of
the host draw, is handed out by each process's utilization share. Whatever
is left (idle floor, unclaimed GPU) goes to a synthetic ``system`` entry, so
the attributed total always equals the host estimate.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

SYSTEM = "system"
HOST_OTHER = "host-other"


class AttributionError(ValueError):
    pass


class ZeroDurationWindow(AttributionError):
    pass


class ShareOverflow(AttributionError):
    pass


@dataclass(frozen=True)
class CounterWindow:
    window_start: int  # unix ms
    window_end: int
    package_energy_delta: float  # J
    per_cpu_busy_time: tuple[float, ...] = ()  # s

    def __post_init__(self):
        if self.window_end <= self.window_start:
            raise ZeroDurationWindow(f"window [{self.window_start}, {self.window_end}] has no duration")
        if self.package_energy_delta < 0:
            raise AttributionError(f"negative counter delta {self.package_energy_delta}")

    @property
    def duration(self) -> float:
        return (self.window_end - self.window_start) / 1000.0


@dataclass(frozen=True)
class ProcessActivity:
    pid: int
    cpu_time_delta: float
    gpu_util_share: float = 0.0
    container_id: str | None = None
    name: str = ""

    def __post_init__(self):
        if self.cpu_time_delta < 0:
            raise AttributionError(f"pid {self.pid}: negative cpu time {self.cpu_time_delta}")
        if not 0.0 <= self.gpu_util_share <= 1.0:
            raise AttributionError(f"pid {self.pid}: gpu share {self.gpu_util_share} outside [0, 1]")


@dataclass(frozen=True)
class GpuSample:
    timestamp: int
    gpu_power: float
    gpu_util: float
    temperature: float | None = None  # ingested, unused

    def __post_init__(self):
        if self.gpu_power < 0:
            raise AttributionError(f"negative gpu power {self.gpu_power}")
        if not 0.0 <= self.gpu_util <= 1.0:
            raise AttributionError(f"gpu utilization {self.gpu_util} outside [0, 1]")


@dataclass(frozen=True)
class ProcessPower:
    pid: int | None  # None for the system residual
    cpu: float
    gpu: float
    name: str = ""
    container_id: str | None = None

    @property
    def power(self) -> float:
        return self.cpu + self.gpu


@dataclass(frozen=True)
class ContainerPower:
    container_id: str
    cpu: float
    gpu: float
    members: tuple[int | None, ...] = field(default=())

    @property
    def power(self) -> float:
        return self.cpu + self.gpu


def estimate_host_power(window: CounterWindow, idle_floor: float) -> float:
    return window.package_energy_delta / window.duration + idle_floor


def attribute_processes(
    host_watts: float,
    host_idle: float,
    acts: Sequence[ProcessActivity],
    gpu: GpuSample | None = None,
) -> list[ProcessPower]:
    """Split ``host_watts`` over ``acts``; the last entry is the system residual."""
    if host_watts < host_idle:
        raise AttributionError(f"host power {host_watts} W below idle level {host_idle} W")
    gpu_total = math.fsum(a.gpu_util_share for a in acts)
    if gpu_total > 1.0 + 1e-12:
        raise ShareOverflow(f"gpu utilization shares sum to {gpu_total}")

    dynamic = host_watts - host_idle
    busy = math.fsum(a.cpu_time_delta for a in acts)
    gpu_power = gpu.gpu_power if gpu is not None else 0.0

    procs = []
    for a in acts:
        cpu_w = dynamic * (a.cpu_time_delta / busy) if busy > 0 else 0.0
        procs.append(ProcessPower(a.pid, cpu_w, gpu_power * a.gpu_util_share, a.name, a.container_id))

    residual = host_watts - math.fsum(p.power for p in procs)
    procs.append(ProcessPower(None, residual, 0.0, SYSTEM))
    return procs


def aggregate_containers(
    procs: Iterable[ProcessPower],
    mapping: Mapping[int, str] | None = None,
) -> list[ContainerPower]:
    """Sum process power per container; unmapped processes land in ``host-other``.

    Without an explicit ``mapping`` the container ids carried by the processes
    are used.
    """
    cpu: dict[str, list[float]] = defaultdict(list)
    gpu: dict[str, list[float]] = defaultdict(list)
    members: dict[str, list[int | None]] = defaultdict(list)
    for p in procs:
        if mapping is not None:
            cid = mapping.get(p.pid) if p.pid is not None else None
        else:
            cid = p.container_id
        key = cid or HOST_OTHER
        cpu[key].append(p.cpu)
        gpu[key].append(p.gpu)
        members[key].append(p.pid)
    return [ContainerPower(k, math.fsum(cpu[k]), math.fsum(gpu[k]), tuple(members[k])) for k in cpu]


def container_power(procs: Iterable[ProcessPower], container_id: str) -> float:
    for c in aggregate_containers(procs):
        if c.container_id == container_id:
            return c.power
    return 0.0
