"""Line-oriented text exposition of power samples.

    power_watts{node="edge",source="hardware"} 133.6 1700000000000

Values are written with ``repr`` so a round trip is bit-exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable

from .series import RawSample

METRIC = "power_watts"
_NAME = r"[a-zA-Z_:][a-zA-Z0-9_:]*"
_LABEL = r'[a-zA-Z_][a-zA-Z0-9_]*="(?:[^"\\\n]|\\.)*"'
_LINE = re.compile(
    rf"^(?P<name>{_NAME})(?:\{{(?P<labels>(?:{_LABEL}(?:,{_LABEL})*)?,?)\}})?"
    r"[ \t]+(?P<value>\S+)(?:[ \t]+(?P<ts>-?\d+))?[ \t]*$"
)
_PAIR = re.compile(r'([a-zA-Z_][a-zA-Z0-9_]*)="((?:[^"\\\n]|\\.)*)"')
_NAME_RE = re.compile(rf"^{_NAME}$")
_LABEL_NAME_RE = re.compile(r"^[a-zA-Z_][a-zA-Z0-9_]*$")
_UNESCAPE = {"\\\\": "\\", '\\"': '"', "\\n": "\n"}


class ExpositionError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line[:120]!r}")


@dataclass(frozen=True)
class ExpositionSample:
    labels: dict[str, str] = field(hash=False)
    value: float
    timestamp_ms: int | None = None
    metric: str = METRIC

    def __post_init__(self):
        if not _NAME_RE.match(self.metric):
            raise ValueError(f"invalid metric name {self.metric!r}")
        for k in self.labels:
            if not _LABEL_NAME_RE.match(k):
                raise ValueError(f"invalid label name {k!r}")

    @classmethod
    def from_raw(cls, s: RawSample) -> ExpositionSample:
        return cls({"node": s.node_id, "source": s.source}, s.power, s.timestamp)

    def to_raw(self, target: str = "") -> RawSample:
        try:
            return RawSample(self.labels["node"], self.labels["source"], self.timestamp_ms, self.value, target)
        except KeyError as exc:
            raise ValueError(f"sample lacks label {exc}") from None


def _escape(v: str) -> str:
    return v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def _unescape(v: str) -> str:
    return re.sub(r"\\[\\\"n]", lambda m: _UNESCAPE[m.group(0)], v)


def _format_value(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "+Inf" if v > 0 else "-Inf"
    return repr(float(v))


def _label_order(labels: dict[str, str]) -> list[str]:
    head = [k for k in ("node", "source") if k in labels]
    return head + sorted(k for k in labels if k not in head)


def emit_exposition(samples: Iterable[ExpositionSample | RawSample]) -> str:
    lines = []
    for s in samples:
        if isinstance(s, RawSample):
            s = ExpositionSample.from_raw(s)
        labels = ",".join(f'{k}="{_escape(s.labels[k])}"' for k in _label_order(s.labels))
        line = s.metric + (f"{{{labels}}}" if labels else "") + " " + _format_value(s.value)
        if s.timestamp_ms is not None:
            line += f" {s.timestamp_ms}"
        lines.append(line)
    return "".join(line + "\n" for line in lines)


def parse_exposition(text: str) -> list[ExpositionSample]:
    """Parse exposition text; ``#`` comments and blank lines are skipped."""
    out = []
    # only "\n" ends a line: label values may hold any other character
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.removesuffix("\r")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE.match(line)
        if m is None:
            raise ExpositionError(lineno, line, "malformed sample line")
        labels: dict[str, str] = {}
        for k, v in _PAIR.findall(m.group("labels") or ""):
            if k in labels:
                raise ExpositionError(lineno, line, f"duplicate label {k!r}")
            labels[k] = _unescape(v)
        try:
            if "_" in m.group("value"):
                raise ValueError
            value = float(m.group("value"))
        except ValueError:
            raise ExpositionError(lineno, line, f"bad value {m.group('value')!r}") from None
        ts = m.group("ts")
        out.append(ExpositionSample(labels, value, int(ts) if ts is not None else None, m.group("name")))
    return out
