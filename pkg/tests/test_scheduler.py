import threading
import time

import pytest

from dualwatt.collector import (
    HARDWARE,
    ExpositionSample,
    RawSample,
    ScrapeScheduler,
    ScrapeTarget,
    SimClock,
    emit_exposition,
    schedule_scrapes,
)
from dualwatt.meterwire import MeterServer, MockMeter, MockMeterConfig, constant_trace


def _exporter(node):
    return lambda: emit_exposition([ExpositionSample({"node": node, "source": "host"}, 1.0, int(time.time() * 1000))])


def _boom():
    raise ConnectionError("target down")


def test_target_validation():
    with pytest.raises(ValueError):
        ScrapeTarget("x", "telemetry", _boom, interval=0)
    with pytest.raises(ValueError):
        ScrapeTarget("m", "meter", "http://127.0.0.1:1")
    with pytest.raises(ValueError):
        ScrapeScheduler([ScrapeTarget("a", "telemetry", _boom), ScrapeTarget("a", "telemetry", _boom)])


def test_rate_jitter_and_isolation():
    interval, duration = 0.1, 6.0
    targets = [ScrapeTarget(f"t{k}", "telemetry", _exporter(f"n{k}"), interval=interval) for k in range(5)]
    targets.append(ScrapeTarget("dead", "telemetry", _boom, interval=interval))
    sched = ScrapeScheduler(targets)
    got: dict[str, int] = {}
    lock = threading.Lock()

    def sink(s: RawSample):
        with lock:
            got[s.node_id] = got.get(s.node_id, 0) + 1

    stop = threading.Event()
    timer = threading.Timer(duration, stop.set)
    timer.start()
    sched.run(stop, sink)
    expected = duration / interval
    for k in range(5):
        assert abs(got[f"n{k}"] - expected) <= 1
        st = sched.status[f"t{k}"]
        assert st.failures == 0
        assert st.max_jitter < interval / 10
    dead = sched.status["dead"]
    assert dead.failures == dead.polls
    assert abs(dead.failures - expected) <= 1
    assert sched.degraded() == ["dead"]
    sched.close()


def test_schedule_scrapes_stream():
    stop = threading.Event()
    n = 0
    for s in schedule_scrapes([ScrapeTarget("t", "telemetry", _exporter("edge"), interval=0.05)], stop):
        n += 1
        if n == 10:
            stop.set()
    assert n >= 10


def test_meter_clock_skew_preserved():
    drift = 0.02  # meter clock runs 2% fast and 1 h ahead
    start = time.time()

    def skewed():
        now = time.time()
        return now + 3600 + drift * (now - start)

    meter = MockMeter(MockMeterConfig({1: "edge"}), constant_trace({1: 129.6}), clock=skewed)
    samples = []
    with MeterServer(meter) as srv:
        target = ScrapeTarget("meter", "meter", srv.url, interval=0.1, channel_map={1: "edge"})
        sched = ScrapeScheduler([target])
        stop = threading.Event()
        threading.Timer(3.0, stop.set).start()
        before = time.time()
        sched.run(stop, samples.append)
        sched.close()
    assert abs(len(samples) - 30) <= 1
    ts = [s.timestamp for s in samples]
    assert ts == sorted(ts)
    assert ts[0] / 1000 > before + 3590
    assert all(s.source == HARDWARE and s.power == 129.6 for s in samples)


def test_virtual_run_is_deterministic():
    clock = SimClock(epoch=1_700_000_000.0)
    seen = []

    def tele():
        return emit_exposition([ExpositionSample({"node": "edge", "source": "host"}, clock.t, int(clock() * 1000))])

    sched = ScrapeScheduler([
        ScrapeTarget("fast", "telemetry", tele, interval=0.5),
        ScrapeTarget("slow", "telemetry", tele, interval=2.0),
        ScrapeTarget("dead", "telemetry", _boom, interval=1.0),
    ])
    out = list(sched.run_virtual(clock, 10.0, before_tick=seen.append))
    assert len(out) == 20 + 5
    assert sched.status["dead"].failures == 10
    assert sorted(seen) == seen
    assert out[0].timestamp == 1_700_000_000_000
