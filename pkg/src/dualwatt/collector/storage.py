"""Embedded append-only time-series store.

Layout under the store root::

    <series-id>/000001.seg     fixed 16-byte records: int64 ts_ms, float64 value

Series ids are slash-separated paths (``run/node/source``). Every writer
session opens a fresh segment; existing segments are never rewritten. On open
all segments are replayed into an in-memory index, dropping a torn trailing
record if the previous writer died mid-write.
"""

from __future__ import annotations

import logging
import os
import re
import struct
import threading
from array import array
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

log = logging.getLogger(__name__)

RECORD = struct.Struct("<qd")
SEGMENT_RECORDS = 1 << 20
_COMPONENT = re.compile(r"^[A-Za-z0-9_.:@+-]+$")


class StorageError(Exception):
    pass


class OutOfOrderAppend(StorageError):
    pass


@dataclass(frozen=True)
class SampleBlock:
    timestamps: np.ndarray  # int64 ms
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamps)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return zip(self.timestamps.tolist(), self.values.tolist())


def _check_id(series_id: str) -> tuple[str, ...]:
    parts = tuple(series_id.split("/"))
    if not parts or any(not _COMPONENT.match(p) or p in (".", "..") for p in parts):
        raise StorageError(f"invalid series id {series_id!r}")
    return parts


class _Series:
    def __init__(self, directory: Path):
        self.dir = directory
        self.lock = threading.Lock()
        self.ts = array("q")
        self.vals = array("d")
        self._fh = None
        self._seg_records = 0
        self._next_seg = 1
        self._load()

    def _segments(self) -> list[Path]:
        return sorted(self.dir.glob("*.seg"))

    def _load(self) -> None:
        segs = self._segments()
        for seg in segs:
            data = seg.read_bytes()
            usable = len(data) - len(data) % RECORD.size
            if usable != len(data):
                log.warning("dropping %d torn bytes at the end of %s", len(data) - usable, seg)
            block = np.frombuffer(data[:usable], dtype=np.dtype([("ts", "<i8"), ("v", "<f8")]))
            self.ts.extend(block["ts"].tolist())
            self.vals.extend(block["v"].tolist())
        if segs:
            self._next_seg = int(segs[-1].stem) + 1

    def _writer(self):
        if self._fh is None or self._seg_records >= SEGMENT_RECORDS:
            if self._fh is not None:
                self._fh.close()
            self.dir.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.dir / f"{self._next_seg:06d}.seg", "ab", buffering=1 << 16)
            self._next_seg += 1
            self._seg_records = 0
        return self._fh

    def append(self, ts: int, value: float) -> None:
        with self.lock:
            if self.ts and ts < self.ts[-1]:
                raise OutOfOrderAppend(f"{self.dir.name}: timestamp {ts} after {self.ts[-1]}")
            self._writer().write(RECORD.pack(ts, value))
            self._seg_records += 1
            self.ts.append(ts)
            self.vals.append(value)

    def snapshot(self, start: int | None, stop: int | None) -> SampleBlock:
        with self.lock:
            n = len(self.ts)
            ts = np.frombuffer(self.ts, dtype=np.int64, count=n).copy() if n else np.empty(0, np.int64)
            vals = np.frombuffer(self.vals, dtype=np.float64, count=n).copy() if n else np.empty(0)
        lo = 0 if start is None else int(np.searchsorted(ts, start, side="left"))
        hi = n if stop is None else int(np.searchsorted(ts, stop, side="right"))
        return SampleBlock(ts[lo:hi], vals[lo:hi])

    def flush(self, fsync: bool = False) -> None:
        with self.lock:
            if self._fh is not None:
                self._fh.flush()
                if fsync:
                    os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self.lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


class TimeSeriesStore:
    """Concurrent appenders on distinct series; one writer per series."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._series: dict[str, _Series] = {}
        self._lock = threading.Lock()

    def _get(self, series_id: str, create: bool) -> _Series | None:
        with self._lock:
            s = self._series.get(series_id)
            if s is None:
                directory = self.root.joinpath(*_check_id(series_id))
                if not create and not directory.is_dir():
                    return None
                s = self._series[series_id] = _Series(directory)
            return s

    def append(self, series_id: str, timestamp: int, value: float) -> None:
        self._get(series_id, create=True).append(int(timestamp), float(value))

    def append_many(self, series_id: str, samples: Iterable[tuple[int, float]]) -> None:
        s = self._get(series_id, create=True)
        for ts, v in samples:
            s.append(int(ts), float(v))

    def query_range(self, series_id: str, start: int | None = None, stop: int | None = None) -> SampleBlock:
        """Samples with ``start <= ts <= stop`` in append order."""
        s = self._get(series_id, create=False)
        if s is None:
            return SampleBlock(np.empty(0, np.int64), np.empty(0))
        return s.snapshot(start, stop)

    def series_ids(self) -> list[str]:
        ids = {
            "/".join(seg.parent.relative_to(self.root).parts) for seg in self.root.rglob("*.seg")
        }
        with self._lock:
            ids.update(self._series)
        return sorted(ids)

    def flush(self, fsync: bool = False) -> None:
        with self._lock:
            series = list(self._series.values())
        for s in series:
            s.flush(fsync)

    def close(self) -> None:
        with self._lock:
            series = list(self._series.values())
        for s in series:
            s.close()

    def __enter__(self) -> TimeSeriesStore:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def store_append(store: TimeSeriesStore, series_id: str, sample: tuple[int, float]) -> None:
    store.append(series_id, *sample)


def query_range(store: TimeSeriesStore, series_id: str, start: int | None = None, stop: int | None = None) -> SampleBlock:
    return store.query_range(series_id, start, stop)
