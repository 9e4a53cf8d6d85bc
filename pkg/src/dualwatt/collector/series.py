from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

HARDWARE = "hardware"
HOST = "host"
CSV_HEADER = ("node", "source", "t_rel_s", "power_w")


class SeriesError(ValueError):
    pass


class SampleBeforeEpoch(SeriesError):
    pass


class WindowOutsideSeries(SeriesError):
    pass


def container_source(name: str) -> str:
    return f"container:{name}"


def valid_source(source: str) -> bool:
    return source in (HARDWARE, HOST) or (source.startswith("container:") and len(source) > len("container:"))


@dataclass(frozen=True)
class RawSample:
    node_id: str
    source: str
    timestamp: int  # unix ms, source clock
    power: float
    target: str = ""


class PowerSeries:
    """Relative-time power trace for one (node, source) pair."""

    __slots__ = ("node_id", "source", "t", "power")

    def __init__(self, node_id: str, source: str, t: Sequence[float], power: Sequence[float]):
        t = np.asarray(t, dtype=np.float64)
        power = np.asarray(power, dtype=np.float64)
        if t.shape != power.shape or t.ndim != 1:
            raise SeriesError("time and power arrays must be 1-d and the same length")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise SeriesError(f"{node_id}/{source}: time must be strictly increasing")
        if np.any(power < 0):
            raise SeriesError(f"{node_id}/{source}: negative power")
        if not valid_source(source):
            raise SeriesError(f"unknown source {source!r}")
        t.setflags(write=False)
        power.setflags(write=False)
        self.node_id = node_id
        self.source = source
        self.t = t
        self.power = power

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return (
            self.node_id == other.node_id
            and self.source == other.source
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.power, other.power)
        )

    def __repr__(self) -> str:
        return f"PowerSeries({self.node_id!r}, {self.source!r}, n={len(self)})"

    @property
    def key(self) -> tuple[str, str]:
        return (self.node_id, self.source)

    def window(self, start: float, stop: float | None = None) -> PowerSeries:
        """Samples with ``start <= t < stop``."""
        mask = self.t >= start
        if stop is not None:
            mask &= self.t < stop
        return PowerSeries(self.node_id, self.source, self.t[mask], self.power[mask])


def align_relative(
    samples: Iterable[RawSample] | PowerSeries,
    t0: int | float,
    node_id: str | None = None,
    source: str | None = None,
) -> PowerSeries:
    """Shift samples to time since the experiment epoch ``t0`` (unix ms).

    Output is sorted; samples sharing a timestamp collapse to the last one seen.
    An already aligned :class:`PowerSeries` is shifted by ``t0`` ms.
    """
    if isinstance(samples, PowerSeries):
        t = samples.t - t0 / 1000.0
        if len(t) and t[0] < 0:
            raise SampleBeforeEpoch(f"{samples.node_id}/{samples.source} starts before the epoch")
        return PowerSeries(samples.node_id, samples.source, t, samples.power)

    latest: dict[int, float] = {}
    for s in samples:
        if node_id is None:
            node_id = s.node_id
        if source is None:
            source = s.source
        if (s.node_id, s.source) != (node_id, source):
            raise SeriesError(f"mixed series: {s.node_id}/{s.source} among {node_id}/{source}")
        if s.timestamp < t0:
            raise SampleBeforeEpoch(f"{s.node_id}/{s.source} sample at {s.timestamp} precedes epoch {t0}")
        latest[s.timestamp] = s.power
    if node_id is None or source is None:
        raise SeriesError("cannot name an empty series; pass node_id and source")
    ts = sorted(latest)
    return PowerSeries(node_id, source, [(ts_ - t0) / 1000.0 for ts_ in ts], [latest[x] for x in ts])


def group_raw(samples: Iterable[RawSample]) -> dict[tuple[str, str], list[RawSample]]:
    groups: dict[tuple[str, str], list[RawSample]] = defaultdict(list)
    for s in samples:
        groups[(s.node_id, s.source)].append(s)
    return dict(groups)


def integrate_energy(series: PowerSeries, start: float, stop: float) -> float:
    """Trapezoidal energy in joules over ``[start, stop]`` seconds.

    Window edges falling between samples are linearly interpolated, which
    keeps the integral additive over adjacent windows.
    """
    if not start < stop:
        raise SeriesError(f"empty window [{start}, {stop}]")
    t, p = series.t, series.power
    if len(t) < 2 or start < t[0] or stop > t[-1]:
        raise WindowOutsideSeries(
            f"window [{start}, {stop}] not covered by {series.node_id}/{series.source}"
            + (f" [{t[0]}, {t[-1]}]" if len(t) else " (empty)")
        )
    inner = (t > start) & (t < stop)
    tt = np.concatenate(([start], t[inner], [stop]))
    pp = np.concatenate(([np.interp(start, t, p)], p[inner], [np.interp(stop, t, p)]))
    return float(np.trapezoid(pp, tt))


def write_csv(series: Iterable[PowerSeries], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in series:
            for t, p in zip(s.t.tolist(), s.power.tolist()):
                w.writerow((s.node_id, s.source, repr(t), repr(p)))
    return path


def read_csv(path: str | Path) -> list[PowerSeries]:
    path = Path(path)
    rows: dict[tuple[str, str], tuple[list[float], list[float]]] = {}
    with path.open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if tuple(header or ()) != CSV_HEADER:
            raise SeriesError(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")
        for lineno, row in enumerate(r, start=2):
            if len(row) != 4:
                raise SeriesError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            node, source, t, p = row
            ts, ps = rows.setdefault((node, source), ([], []))
            try:
                ts.append(float(t))
                ps.append(float(p))
            except ValueError as exc:
                raise SeriesError(f"{path}:{lineno}: {exc}") from None
    return [PowerSeries(node, source, ts, ps) for (node, source), (ts, ps) in rows.items()]
