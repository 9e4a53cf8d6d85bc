import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualwatt.collector import (
    CSV_HEADER,
    PowerSeries,
    RawSample,
    SampleBeforeEpoch,
    SeriesError,
    WindowOutsideSeries,
    align_relative,
    integrate_energy,
    read_csv,
    write_csv,
)

T0 = 1_700_000_000_000


def raw(ts, p, node="edge", source="hardware"):
    return RawSample(node, source, ts, p)


def test_align_basic():
    s = align_relative([raw(T0, 5.0), raw(T0 + 1000, 6.0)], T0)
    assert s.t.tolist() == [0.0, 1.0]
    assert s.power.tolist() == [5.0, 6.0]


def test_two_clocks_share_epoch():
    meter = align_relative([raw(T0 + k * 1000, 133.6) for k in range(3)], T0)
    tele = align_relative([raw(T0 + k * 1000, 106.85, source="host") for k in range(3)], T0)
    assert meter.t[0] == tele.t[0] == 0.0


def test_duplicates_keep_last():
    s = align_relative([raw(T0, 1.0), raw(T0 + 500, 2.0), raw(T0 + 500, 3.0)], T0)
    assert s.power.tolist() == [1.0, 3.0]


def test_before_epoch():
    with pytest.raises(SampleBeforeEpoch):
        align_relative([raw(T0 - 1, 1.0)], T0)


def test_mixed_series_rejected():
    with pytest.raises(SeriesError):
        align_relative([raw(T0, 1.0), raw(T0 + 1, 1.0, node="core")], T0)


@given(st.lists(st.integers(0, 10**7), min_size=1, max_size=60, unique=True), st.randoms())
def test_shuffled_input_sorted(offsets, rnd):
    samples = [raw(T0 + o, float(o % 97)) for o in offsets]
    rnd.shuffle(samples)
    s = align_relative(samples, T0)
    assert s.t.tolist() == sorted(o / 1000 for o in offsets)
    assert np.all(np.diff(s.t) > 0)


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=30, unique=True))
def test_align_idempotent_at_zero(ts):
    ts = sorted(ts)
    s = PowerSeries("edge", "host", ts, [1.0] * len(ts))
    assert align_relative(s, 0) == s


def test_series_invariants():
    with pytest.raises(SeriesError):
        PowerSeries("e", "hardware", [0, 0], [1, 1])
    with pytest.raises(SeriesError):
        PowerSeries("e", "hardware", [0, 1], [1, -1])
    with pytest.raises(SeriesError):
        PowerSeries("e", "bogus", [0], [1])
    PowerSeries("e", "container:renderer", [0], [1])


def test_integrate_constant():
    t = np.arange(0, 3601, 1.0)
    assert integrate_energy(PowerSeries("e", "hardware", t, np.full_like(t, 100.0)), 0, 3600) == pytest.approx(360_000)


def test_integrate_ramp():
    t = np.arange(0, 101, 1.0)
    assert integrate_energy(PowerSeries("e", "hardware", t, t.copy()), 0, 100) == pytest.approx(5000)


def test_integrate_outside():
    s = PowerSeries("e", "hardware", [0, 1, 2], [1, 1, 1])
    with pytest.raises(WindowOutsideSeries):
        integrate_energy(s, 0, 3)
    with pytest.raises(SeriesError):
        integrate_energy(s, 1, 1)


def _riemann(s, a, b, steps=200_000):
    # midpoint sum over the piecewise-linear signal
    h = (b - a) / steps
    mids = a + h * (np.arange(steps) + 0.5)
    return float(np.sum(np.interp(mids, s.t, s.power)) * h)


@pytest.mark.parametrize("seed", range(10))
def test_integrate_vs_riemann(seed):
    rng = np.random.default_rng(seed)
    t = np.cumsum(rng.uniform(0.05, 3.0, 80))
    p = rng.uniform(0, 300, 80)
    s = PowerSeries("e", "hardware", t, p)
    a, b = sorted(rng.uniform(t[0], t[-1], 2))
    assert integrate_energy(s, a, b) == pytest.approx(_riemann(s, a, b), rel=1e-3)


@given(st.data())
def test_integration_additive(data):
    n = data.draw(st.integers(2, 40))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    t = np.cumsum(rng.uniform(0.01, 5.0, n))
    s = PowerSeries("e", "hardware", t, rng.uniform(0, 500, n))
    a, b, c = sorted(rng.uniform(t[0], t[-1], 3))
    if not a < b < c:
        return
    whole = integrate_energy(s, a, c)
    parts = integrate_energy(s, a, b) + integrate_energy(s, b, c)
    assert math.isclose(parts, whole, rel_tol=1e-9, abs_tol=1e-9)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    series = [
        PowerSeries("edge", "hardware", np.arange(5.0), rng.uniform(100, 200, 5)),
        PowerSeries("edge", "container:renderer", np.arange(5.0) / 3, rng.uniform(10, 60, 5)),
    ]
    path = write_csv(series, tmp_path / "x.csv")
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER) == "node,source,t_rel_s,power_w"
    assert read_csv(path) == series


def test_csv_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("node,source,t,p\n")
    with pytest.raises(SeriesError):
        read_csv(p)
