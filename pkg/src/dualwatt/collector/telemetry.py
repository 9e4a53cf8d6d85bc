"""Software telemetry exporter for the simulated edge node.

Turns each simulated counter window into host power and per-container power
(via :mod:`dualwatt.attribution`) and exposes them as exposition text, the
way a node power exporter would.
"""

from __future__ import annotations

from ..attribution import HOST_OTHER, aggregate_containers, attribute_processes, estimate_host_power
from ..testbedsim import SimModel
from .exposition import ExpositionSample, emit_exposition
from .scheduler import SimClock
from .series import HOST, container_source


class SimTelemetryExporter:
    def __init__(self, model: SimModel, clock: SimClock, node_id: str = "edge"):
        self.model = model
        self.clock = clock
        self.node_id = node_id

    def samples(self, t: float) -> list[ExpositionSample]:
        m = self.model
        out = m.step(t)
        host = estimate_host_power(out.window, m.counter_floor)
        procs = attribute_processes(host, m.attribution_idle, out.activities, out.gpu)
        ts = out.window.window_start
        samples = [ExpositionSample({"node": self.node_id, "source": HOST}, host, ts)]
        for c in sorted(aggregate_containers(procs), key=lambda c: c.container_id):
            if c.container_id != HOST_OTHER:
                samples.append(ExpositionSample({"node": self.node_id, "source": container_source(c.container_id)}, c.power, ts))
        return samples

    def __call__(self) -> str:
        return emit_exposition(self.samples(self.clock.t))
