"""Seeded testbed simulator.

Every run precomputes its whole trace at build time, so ``step`` is a cheap
index into immutable arrays and two builds with the same configuration and
seed produce identical outputs. Each noise source draws from its own seed
stream keyed by role, so runs sharing a seed share their noise realisation
(common random numbers), which keeps scenario-to-scenario comparisons tight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import NODES
from ..attribution import CounterWindow, GpuSample, ProcessActivity
from .calibration import Calibration, Levels, resolve_levels
from .config import IDLE, ScenarioConfig, active_ues

RENDERER_POD = "renderer"
EPOCH_MS = 1_700_000_000_000

_STREAMS = {f"hw:{n}": i for i, n in enumerate(NODES)} | {
    "spikes": 10,
    "host": 11,
    "container": 12,
    "gpu": 13,
    "cpu": 14,
}

# (pid, name, container, share of the pod's cpu time, share of the pod's gpu share)
RENDERER_PROCS = ((4101, "unity-renderer", RENDERER_POD, 0.62, 0.85), (4102, "gst-encoder", RENDERER_POD, 0.38, 0.15))
# (pid, name, container, weight within background cpu time)
BACKGROUND_PROCS = (
    (612, "kubelet", None, 0.30),
    (598, "containerd", None, 0.15),
    (4201, "moq-relay", "moq-relay", 0.25),
    (3301, "scaphandre", "monitoring", 0.12),
    (3302, "node-exporter", "monitoring", 0.08),
    (2, "kthreadd", None, 0.10),
)


def broadcast_load(scenario: str | int, n_active_ues: int | None = None) -> float:
    """Edge rendering workload factor: one shared stream whatever the UE count."""
    if n_active_ues is None:
        if isinstance(scenario, int):
            n_active_ues = scenario
        else:
            n_active_ues = active_ues(scenario)
    if n_active_ues < 0:
        raise ValueError("negative UE count")
    return 1.0 if n_active_ues >= 1 else 0.0


@dataclass(frozen=True)
class TickOutput:
    t: float
    true_power: dict[str, float]
    window: CounterWindow
    activities: tuple[ProcessActivity, ...]
    gpu: GpuSample


def _rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STREAMS[stream],)))


class SimModel:
    def __init__(self, cfg: ScenarioConfig, cal: Calibration):
        self.cfg = cfg
        self.cal = cal
        self.active: Levels = resolve_levels(cfg, cal)
        # the idle state only matters when the renderer is toggled mid-run
        toggled = cfg.renderer_on_at is not None
        self.idle: Levels = resolve_levels(cfg, cal, IDLE) if toggled else self.active
        eh = cal.edge_host
        self.counter_floor = float(eh["counter_floor_w"])
        self.attribution_idle = float(eh["attribution_idle_w"])
        self.cores = int(eh["cores"])
        self._build()

    # deterministic components -------------------------------------------

    def workload(self, t: float) -> float:
        """Share of the active operating state in effect at time ``t`` (0 or 1)."""
        w = broadcast_load(self.cfg.scenario)
        if self.cfg.renderer_on_at is not None and t < self.cfg.renderer_on_at:
            return 0.0
        return w

    def _mix(self, idle: float, active: float, w: np.ndarray) -> np.ndarray:
        return idle + w * (active - idle)

    def deterministic_hardware(self, node: str, t: float) -> float:
        w = self.workload(t)
        return self.idle.hardware[node] + w * (self.active.hardware[node] - self.idle.hardware[node])

    def deterministic_host(self, t: float) -> float:
        w = self.workload(t)
        return self.idle.host + w * (self.active.host - self.idle.host)

    def deterministic_renderer(self, t: float) -> float:
        w = self.workload(t)
        return self.idle.renderer + w * (self.active.renderer - self.idle.renderer)

    # trace synthesis ------------------------------------------------------

    def _build(self) -> None:
        cfg, noise = self.cfg, self.cal.noise
        n = cfg.n_ticks
        self.t = np.arange(n) * cfg.tick
        w = np.array([self.workload(t) for t in self.t])
        self._w = w

        spikes_cfg = noise["spikes"]
        spike_nodes = set(spikes_cfg["nodes"])
        lo_a, hi_a = spikes_cfg["amplitude_w"]
        lo_w, hi_w = spikes_cfg["width_ticks"]
        rate = float(spikes_cfg["rate_per_s"])
        # spikes only add power; the baseline gives back their expected share
        spike_mean = rate * cfg.tick * 0.5 * (lo_a + hi_a) * 0.5 * (lo_w + hi_w)

        rng = _rng(cfg.seed, "spikes")
        counts = rng.poisson(rate * cfg.tick, size=n)
        spike = np.zeros(n)
        for k in np.flatnonzero(counts):
            for _ in range(counts[k]):
                amp = rng.uniform(lo_a, hi_a)
                width = int(rng.integers(lo_w, hi_w + 1))
                spike[k : k + width] += amp

        self.hardware: dict[str, np.ndarray] = {}
        for node in NODES:
            level = self._mix(self.idle.hardware[node], self.active.hardware[node], w)
            sigma = float(noise["hardware_sigma_w"].get(node, 0.0))
            trace = level + _rng(cfg.seed, f"hw:{node}").normal(0.0, sigma, n)
            if node in spike_nodes:
                trace = trace - spike_mean + spike
            self.hardware[node] = np.maximum(trace, 0.0)

        host_det = self._mix(self.idle.host, self.active.host, w)
        self.host = np.maximum(
            host_det + _rng(cfg.seed, "host").normal(0.0, noise["host_sigma_w"], n), self.attribution_idle + 1.0
        )
        rend_det = self._mix(self.idle.renderer, self.active.renderer, w)
        self.renderer = np.maximum(rend_det + _rng(cfg.seed, "container").normal(0.0, noise["container_sigma_w"], n), 0.0)

        gpu = self.cal.edge_host["gpu"]
        g_idle, g_act = gpu["idle"], gpu["active"]
        self.gpu_power = np.maximum(
            self._mix(g_idle["power_w"], g_act["power_w"], w)
            + _rng(cfg.seed, "gpu").normal(0.0, noise["gpu_sigma_w"], n),
            0.0,
        )
        self.gpu_share = self._mix(g_idle["renderer_share"], g_act["renderer_share"], w)
        self.gpu_util = np.clip(self._mix(g_idle["util"], g_act["util"], w), self.gpu_share, 1.0)

        util = self.cal.edge_host["cpu_util"]
        cpu_rng = _rng(cfg.seed, "cpu")
        busy = self.cores * cfg.tick * self._mix(util["idle"], util["active"], w)
        self.busy = busy * (1.0 + 0.05 * cpu_rng.standard_normal(n)).clip(0.5, 1.5)
        # renderer cpu share chosen so attribution returns the injected pod power
        dynamic = self.host - self.attribution_idle
        self.renderer_cpu_share = np.clip((self.renderer - self.gpu_power * self.gpu_share) / dynamic, 0.0, 1.0)
        weights = np.array([p[3] for p in BACKGROUND_PROCS])
        jitter = cpu_rng.uniform(0.8, 1.2, size=(n, len(weights)))
        bg = weights * jitter
        self.background_split = bg / bg.sum(axis=1, keepdims=True)

    # stepping -------------------------------------------------------------

    def index(self, t: float) -> int:
        k = int(round(t / self.cfg.tick))
        if not 0 <= k < self.cfg.n_ticks or abs(k * self.cfg.tick - t) > 1e-6 * self.cfg.tick:
            raise ValueError(f"t={t} is not a tick of this run (tick {self.cfg.tick}, duration {self.cfg.duration})")
        return k

    def true_power(self, node: str, t: float) -> float:
        return float(self.hardware[node][self.index(t)])

    def step(self, t: float) -> TickOutput:
        k = self.index(t)
        tick_ms = int(round(self.cfg.tick * 1000))
        start = EPOCH_MS + k * tick_ms
        window = CounterWindow(
            window_start=start,
            window_end=start + tick_ms,
            package_energy_delta=float(max(self.host[k] - self.counter_floor, 0.0) * self.cfg.tick),
            per_cpu_busy_time=(float(self.busy[k]),),
        )
        busy = float(self.busy[k])
        rend_cpu = busy * float(self.renderer_cpu_share[k])
        share = float(self.gpu_share[k])
        acts = [
            ProcessActivity(pid, rend_cpu * cpu_frac, share * gpu_frac, container, name)
            for pid, name, container, cpu_frac, gpu_frac in RENDERER_PROCS
        ]
        rest = busy - rend_cpu
        acts += [
            ProcessActivity(pid, rest * float(frac), 0.0, container, name)
            for (pid, name, container, _), frac in zip(BACKGROUND_PROCS, self.background_split[k])
        ]
        gpu = GpuSample(start, float(self.gpu_power[k]), float(self.gpu_util[k]))
        return TickOutput(
            t=float(self.t[k]),
            true_power={node: float(self.hardware[node][k]) for node in NODES},
            window=window,
            activities=tuple(acts),
            gpu=gpu,
        )

    def ticks(self):
        for t in self.t:
            yield self.step(float(t))


def build_scenario(cfg: ScenarioConfig, cal: Calibration | None = None) -> SimModel:
    return SimModel(cfg, cal or Calibration.load())
