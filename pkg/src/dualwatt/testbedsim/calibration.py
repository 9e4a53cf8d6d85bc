"""Calibration table: measured average power per grid point, and the look-up
rules that turn it into per-node levels for any scenario configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .. import NODES
from .config import BANDWIDTHS, IDLE, ONE_ACTIVE, TWO_ACTIVE, ScenarioConfig

BROADCAST_NODES = ("edge", "ue1")


class CalibrationError(ValueError):
    pass


class UncalibratedPoint(CalibrationError):
    pass


class DegenerateGap(CalibrationError):
    pass


@dataclass(frozen=True)
class GapModel:
    """Metered power seen from the host: ``hw = host + alpha + beta * (host - host_idle)``."""

    alpha: float
    beta: float
    host_idle: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise CalibrationError(f"gap model needs alpha, beta >= 0 (got {self.alpha}, {self.beta})")

    def hardware_from_host(self, host: float) -> float:
        return host + self.alpha + self.beta * (host - self.host_idle)

    def host_from_hardware(self, hw: float) -> float:
        return self.host_idle + (hw - self.alpha - self.host_idle) / (1.0 + self.beta)


def fit_gap_model(idle: tuple[float, float], active: tuple[float, float]) -> GapModel:
    """Fit the two-parameter gap from one idle and one active (hardware, host) pair."""
    hw_idle, host_idle = idle
    hw_act, host_act = active
    if host_act == host_idle:
        raise DegenerateGap("idle and active host power coincide")
    if host_act < host_idle:
        raise DegenerateGap("active host power below idle host power")
    alpha = hw_idle - host_idle
    beta = (hw_act - host_act - alpha) / (host_act - host_idle)
    return GapModel(alpha, beta, host_idle)


@dataclass(frozen=True)
class GridPoint:
    campaign: str
    scenario: str
    bitrate: float | None
    bandwidth: int
    hardware: dict[str, float]
    host: float | None = None
    renderer: float | None = None

    @property
    def key(self) -> tuple:
        return (self.campaign, self.scenario, self.bitrate, self.bandwidth)


def _key(campaign: str, scenario: str, bitrate: float | None, bandwidth: float) -> tuple:
    return (campaign, scenario, None if bitrate is None else float(bitrate), int(bandwidth))


def _interp(points: dict[float, float], x: float) -> float:
    """Piecewise-linear through ``points``, continued linearly past the ends."""
    xs = sorted(points)
    if len(xs) == 1:
        return points[xs[0]]
    if x <= xs[0]:
        lo, hi = xs[0], xs[1]
    elif x >= xs[-1]:
        lo, hi = xs[-2], xs[-1]
    else:
        hi = next(b for b in xs if b >= x)
        lo = xs[xs.index(hi) - 1]
    return points[lo] + (points[hi] - points[lo]) * (x - lo) / (hi - lo)


class Calibration:
    def __init__(self, data: dict[str, Any]):
        self.data = data
        self.version = str(data["version"])
        self.points: dict[tuple, GridPoint] = {}
        for raw in data["points"]:
            p = GridPoint(
                campaign=raw["campaign"],
                scenario=raw["scenario"],
                bitrate=None if raw["bitrate"] is None else float(raw["bitrate"]),
                bandwidth=int(raw["bandwidth"]),
                hardware={k: float(v) for k, v in raw["hardware"].items()},
                host=raw.get("host"),
                renderer=raw.get("renderer"),
            )
            for node, watts in p.hardware.items():
                if node not in NODES:
                    raise CalibrationError(f"unknown node {node!r}")
                if watts <= 0:
                    raise CalibrationError(f"non-positive mean at {p.key}/{node}")
            if p.key in self.points:
                raise CalibrationError(f"duplicate grid point {p.key}")
            self.points[p.key] = p
        self.edge_host = data["edge_host"]
        self.noise = data["noise"]
        ref = data["gap_reference"]
        idle, active = self._ref_point(ref["idle"]), self._ref_point(ref["active"])
        self.gap = fit_gap_model((idle.hardware["edge"], idle.host), (active.hardware["edge"], active.host))

    def _ref_point(self, ref: dict) -> GridPoint:
        p = self.points.get(_key(ref["campaign"], ref["scenario"], ref["bitrate"], ref["bandwidth"]))
        if p is None or p.host is None or "edge" not in p.hardware:
            raise CalibrationError(f"gap reference {ref} lacks edge hardware/host values")
        return p

    @classmethod
    def load(cls, path: str | Path | None = None) -> Calibration:
        if path is None or str(path) == "builtin":
            text = resources.files(__package__).joinpath("calibration.json").read_text()
        else:
            text = Path(path).read_text()
        return cls(json.loads(text))

    # -- hardware levels -------------------------------------------------

    def _exact(self, campaign, scenario, bitrate, bandwidth, node) -> float | None:
        p = self.points.get(_key(campaign, scenario, bitrate, bandwidth))
        if p is not None and node in p.hardware:
            return p.hardware[node]
        if campaign == "comparison":
            # the comparison campaign only metered the edge node
            return self._exact("e2e", scenario, bitrate, bandwidth, node)
        return None

    def _on_grid(self, campaign, scenario, bitrate, bandwidth, node) -> float | None:
        if scenario == ONE_ACTIVE and node == "ue2":
            # second UE stays connected but idle
            return self._exact(campaign, IDLE, None, bandwidth, node)
        if scenario != IDLE and node in BROADCAST_NODES:
            # one broadcast stream: edge and the first UE do not see the UE count
            for scen in (ONE_ACTIVE, TWO_ACTIVE):
                v = self._exact(campaign, scen, bitrate, bandwidth, node)
                if v is not None:
                    return v
            return None
        return self._exact(campaign, scenario, bitrate, bandwidth, node)

    def _bitrates(self, campaign, scenario, bandwidth, node) -> dict[float, float]:
        found = {}
        # broadcast nodes read the same levels whichever active scenario measured them
        shared = scenario != IDLE and node in BROADCAST_NODES
        scenarios = (ONE_ACTIVE, TWO_ACTIVE) if shared else (scenario,)
        for (c, s, b, bw) in self.points:
            if s in scenarios and bw == bandwidth and b is not None and c in (campaign, "e2e"):
                v = self._on_grid(campaign, scenario, b, bandwidth, node)
                if v is not None:
                    found[b] = v
        return found

    def _same_bandwidth(self, campaign, scenario, bitrate, bandwidth, node) -> float | None:
        v = self._on_grid(campaign, scenario, bitrate, bandwidth, node)
        if v is not None or scenario == IDLE:
            return v
        pts = self._bitrates(campaign, scenario, bandwidth, node)
        if len(pts) >= 2:
            return _interp(pts, bitrate)
        if len(pts) == 1:
            (b0, v0), = pts.items()
            slope_pts = self._bitrates(campaign, ONE_ACTIVE, bandwidth, node)
            if len(slope_pts) >= 2:
                return v0 + _interp(slope_pts, bitrate) - _interp(slope_pts, b0)
            return v0
        return None

    def _bandwidth_ratio(self, node, target: int, other: int) -> float:
        for (c, s, b, bw), p in self.points.items():
            if bw != other or node not in p.hardware:
                continue
            twin = self.points.get((c, s, b, target))
            if twin is not None and node in twin.hardware:
                return twin.hardware[node] / p.hardware[node]
        return 1.0

    def hardware_level(self, campaign, scenario, bitrate, bandwidth, node, extrapolate=False) -> float:
        v = self._on_grid(campaign, scenario, bitrate, bandwidth, node)
        if v is not None:
            return v
        if not extrapolate:
            raise UncalibratedPoint(
                f"no calibrated {node} power for {campaign}/{scenario}/{bitrate}/{bandwidth} MHz (use extrapolate)"
            )
        v = self._same_bandwidth(campaign, scenario, bitrate, bandwidth, node)
        if v is not None:
            return v
        others = sorted((b for b in BANDWIDTHS if b != bandwidth), key=lambda b: abs(b - bandwidth))
        for other in others:
            base = self._same_bandwidth(campaign, scenario, bitrate, other, node)
            if base is not None:
                return base * self._bandwidth_ratio(node, bandwidth, other)
        raise UncalibratedPoint(f"cannot extrapolate {node} power for {campaign}/{scenario}/{bitrate}/{bandwidth} MHz")

    # -- software levels (edge only) --------------------------------------

    def host_level(self, cfg_like: tuple, edge_hw: float) -> float:
        campaign, scenario, bitrate, bandwidth = cfg_like
        p = self.points.get(_key(campaign, scenario, bitrate, bandwidth))
        if p is not None and p.host is not None:
            return float(p.host)
        return self.gap.host_from_hardware(edge_hw)

    def renderer_level(self, cfg_like: tuple) -> float:
        campaign, scenario, bitrate, bandwidth = cfg_like
        p = self.points.get(_key(campaign, scenario, bitrate, bandwidth))
        if p is not None and p.renderer is not None:
            return float(p.renderer)
        # pod load follows the single broadcast stream, whatever the UE count or radio setup
        candidates = [q for q in self.points.values() if q.renderer is not None]
        if scenario == IDLE:
            idle = [q.renderer for q in candidates if q.scenario == IDLE]
            if idle:
                return float(idle[0])
        else:
            pts = {q.bitrate: float(q.renderer) for q in candidates if q.scenario != IDLE and q.bitrate is not None}
            if pts:
                return _interp(pts, bitrate)
        raise UncalibratedPoint(f"no renderer calibration usable for {cfg_like}")


@dataclass(frozen=True)
class Levels:
    """Deterministic per-run power levels for one operating state."""

    hardware: dict[str, float]
    host: float
    renderer: float


def resolve_levels(cfg: ScenarioConfig, cal: Calibration, scenario: str | None = None) -> Levels:
    scenario = scenario or cfg.scenario
    bitrate = None if scenario == IDLE else cfg.bitrate
    hw = {
        node: cal.hardware_level(cfg.campaign, scenario, bitrate, cfg.bandwidth, node, cfg.extrapolate)
        for node in NODES
    }
    point = (cfg.campaign, scenario, bitrate, cfg.bandwidth)
    return Levels(hw, cal.host_level(point, hw["edge"]), cal.renderer_level(point))
