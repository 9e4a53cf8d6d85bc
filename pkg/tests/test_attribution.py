import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualwatt.attribution import (
    HOST_OTHER,
    SYSTEM,
    AttributionError,
    CounterWindow,
    GpuSample,
    ProcessActivity,
    ProcessPower,
    ShareOverflow,
    ZeroDurationWindow,
    aggregate_containers,
    attribute_processes,
    container_power,
    estimate_host_power,
)
from dualwatt.collector.telemetry import SimTelemetryExporter
from dualwatt.collector import SimClock
from dualwatt.testbedsim import EPOCH_MS, ONE_ACTIVE, ScenarioConfig, build_scenario


def test_host_power_from_counter():
    assert estimate_host_power(CounterWindow(0, 10_000, 1000.0), 0.0) == 100.0
    assert estimate_host_power(CounterWindow(0, 10_000, 0.0), 40.0) == 40.0


def test_zero_duration_window():
    with pytest.raises(ZeroDurationWindow):
        CounterWindow(5, 5, 1.0)
    with pytest.raises(AttributionError):
        CounterWindow(0, 1000, -1.0)


def test_proportional_split():
    procs = attribute_processes(200.0, 100.0, [ProcessActivity(1, 3.0), ProcessActivity(2, 1.0)])
    assert [p.cpu for p in procs[:2]] == [75.0, 25.0]
    assert procs[-1].name == SYSTEM and procs[-1].pid is None
    assert procs[-1].power == pytest.approx(100.0)


def test_gpu_term_and_zero_activity():
    gpu = GpuSample(0, 80.0, 0.7)
    procs = attribute_processes(
        150.0, 100.0, [ProcessActivity(1, 0.0, 0.5), ProcessActivity(2, 2.0, 0.0), ProcessActivity(3, 0.0, 0.0)], gpu
    )
    idle_gpu_user, busy, idle = procs[:3]
    assert idle_gpu_user.cpu == 0.0 and idle_gpu_user.gpu == 40.0
    assert busy.cpu == 50.0 and busy.gpu == 0.0
    assert idle.power == 0.0


def test_all_idle_processes():
    procs = attribute_processes(100.0, 100.0, [ProcessActivity(1, 0.0), ProcessActivity(2, 0.0)])
    assert [p.power for p in procs[:2]] == [0.0, 0.0]
    assert procs[-1].power == 100.0


def test_share_overflow():
    with pytest.raises(ShareOverflow):
        attribute_processes(200.0, 100.0, [ProcessActivity(1, 1.0, 0.6), ProcessActivity(2, 1.0, 0.5)], GpuSample(0, 10, 1))


def test_host_below_idle_rejected():
    with pytest.raises(AttributionError):
        attribute_processes(50.0, 60.0, [])


def test_renderer_pod_sum():
    procs = [
        ProcessPower(1, 30.0, 10.0, "unity", "renderer"),
        ProcessPower(2, 20.0, 4.49, "gst", "renderer"),
        ProcessPower(3, 5.0, 0.0, "kubelet"),
    ]
    by_id = {c.container_id: c for c in aggregate_containers(procs)}
    assert by_id["renderer"].power == pytest.approx(64.49)
    assert by_id["renderer"].members == (1, 2)
    assert by_id[HOST_OTHER].power == 5.0
    assert container_power(procs, "renderer") == pytest.approx(64.49)
    assert container_power(procs, "absent") == 0.0


def test_explicit_mapping_overrides_labels():
    procs = [ProcessPower(1, 40.0, 0.0), ProcessPower(2, 24.49, 0.0), ProcessPower(None, 10.0, 0.0, SYSTEM)]
    by_id = {c.container_id: c.power for c in aggregate_containers(procs, {1: "renderer", 2: "renderer"})}
    assert by_id == {"renderer": pytest.approx(64.49), HOST_OTHER: 10.0}


def test_empty_process_list():
    assert aggregate_containers([]) == []


def _oracle(host, idle, cpu, gpu_share, gpu_power):
    busy = sum(cpu)
    return [((host - idle) * c / busy if busy else 0.0) + gpu_power * g for c, g in zip(cpu, gpu_share)]


def _random_case(rng):
    n = int(rng.integers(0, 12))
    idle = float(rng.uniform(0, 200))
    host = idle + float(rng.exponential(100)) * rng.choice([0, 1], p=[0.05, 0.95])
    cpu = (rng.exponential(1.0, n) * rng.choice([0, 1], n, p=[0.2, 0.8])).tolist()
    raw = rng.dirichlet(np.ones(n + 1))[:n] if n else np.empty(0)
    gpu_share = (raw * rng.uniform(0, 1)).tolist()
    gpu_power = float(rng.uniform(0, min(host, 300)))
    return host, idle, cpu, gpu_share, gpu_power


def test_conservation_ten_thousand_inputs():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(10_000):
        host, idle, cpu, gs, gp = _random_case(rng)
        acts = [ProcessActivity(i, c, g) for i, (c, g) in enumerate(zip(cpu, gs))]
        procs = attribute_processes(host, idle, acts, GpuSample(0, gp, 0.5))
        total = math.fsum(p.power for p in procs)
        worst = max(worst, abs(total - host) / max(host, 1e-300))
        expected = _oracle(host, idle, cpu, gs, gp)
        for p, e in zip(procs, expected):
            assert p.power == pytest.approx(e, rel=1e-12, abs=1e-12)
        containers = aggregate_containers(procs)
        assert math.fsum(c.power for c in containers) == pytest.approx(total, rel=1e-12, abs=1e-12)
    assert worst <= 1e-9


@settings(max_examples=300)
@given(
    st.lists(st.floats(0, 100), min_size=1, max_size=10),
    st.floats(1e-3, 1e3),
    st.floats(0, 500),
    st.floats(0, 500),
)
def test_scaling_cpu_time_keeps_shares(cpu, factor, idle, dyn):
    host = idle + dyn
    a = attribute_processes(host, idle, [ProcessActivity(i, c) for i, c in enumerate(cpu)])
    b = attribute_processes(host, idle, [ProcessActivity(i, c * factor) for i, c in enumerate(cpu)])
    for x, y in zip(a[:-1], b[:-1]):
        assert x.cpu == pytest.approx(y.cpu, rel=1e-9, abs=1e-9)


@settings(max_examples=300)
@given(
    st.lists(st.tuples(st.floats(0, 50), st.sampled_from([None, "a", "b", "renderer"])), max_size=10),
    st.floats(0, 300),
    st.floats(0, 300),
)
def test_container_conservation(items, idle, dyn):
    acts = [ProcessActivity(i, c, 0.0, cid) for i, (c, cid) in enumerate(items)]
    procs = attribute_processes(idle + dyn, idle, acts)
    containers = aggregate_containers(procs)
    assert math.fsum(c.power for c in containers) == pytest.approx(idle + dyn, rel=1e-12, abs=1e-9)


def test_simulated_renderer_attribution_recovers_pod_power():
    cfg = ScenarioConfig(campaign="comparison", scenario=ONE_ACTIVE, bitrate=10, duration=300)
    model = build_scenario(cfg)
    exporter = SimTelemetryExporter(model, SimClock(EPOCH_MS / 1000))
    rend = []
    for k in range(cfg.n_ticks):
        by_source = {s.labels["source"]: s.value for s in exporter.samples(float(k))}
        rend.append(by_source["container:renderer"])
        assert by_source["container:renderer"] <= by_source["host"]
    assert np.mean(rend) == pytest.approx(64.49, rel=0.02)
