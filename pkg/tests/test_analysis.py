import json
import logging
import statistics

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualwatt import NODES
from dualwatt.analysis import (
    EmptyAfterTrim,
    EnergyReport,
    MissingBaseline,
    ZeroBaseline,
    build_report,
    e2e_total,
    export_trace,
    percent_increase,
    render_tables,
    report_json_schema,
    share,
    summarize,
    underestimation,
)
from dualwatt.collector import PowerSeries, read_csv
from dualwatt.testbedsim import IDLE, ONE_ACTIVE, ScenarioConfig


def series(power, node="edge", source="hardware", start=0.0):
    power = np.asarray(power, float)
    return PowerSeries(node, source, start + np.arange(len(power)), power)


def test_summarize_constant():
    s = summarize(series([100.0] * 50), warmup=10)
    assert (s.mean, s.std, s.n, s.coverage, s.degraded) == (100.0, 0.0, 40, 1.0, False)


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=80), st.randoms())
def test_summarize_oracle_and_permutation(values, rnd):
    s = summarize(series(values), warmup=0)
    assert s.mean == pytest.approx(statistics.fmean(values), rel=1e-9, abs=1e-9)
    assert s.std == pytest.approx(statistics.pstdev(values), rel=1e-9, abs=1e-6)
    shuffled = values[:]
    rnd.shuffle(shuffled)
    p = summarize(series(shuffled), warmup=0)
    assert p.mean == pytest.approx(s.mean, rel=1e-12, abs=1e-9)
    assert p.std == pytest.approx(s.std, rel=1e-9, abs=1e-6)


def test_summarize_trim_and_coverage():
    with pytest.raises(EmptyAfterTrim):
        summarize(series([1.0] * 5), warmup=10)
    gappy = PowerSeries("edge", "hardware", np.arange(10, 100, 2.0), np.ones(45))
    s = summarize(gappy, warmup=10, expected=90)
    assert s.coverage == 0.5 and s.degraded


@pytest.mark.parametrize(
    "active, base, want",
    [(223.43, 133.60, 67.24), (64.49, 20.68, 211.87), (5.0, 5.0, 0.0)],
)
def test_percent_increase(active, base, want):
    # quoted percentages come from unrounded means, so allow a rounding step
    assert percent_increase(active, base) == pytest.approx(want, abs=0.05)


def test_ratio_examples():
    assert round(underestimation(133.60, 106.85), 2) == -20.02
    assert round(underestimation(223.43, 166.88), 2) == -25.31
    assert underestimation(100, 100) == 0
    assert round(share(20.68, 106.85), 2) == 19.35
    assert round(share(64.49, 166.88), 2) == 38.64
    assert share(0, 100) == 0
    with pytest.raises(ZeroBaseline):
        percent_increase(1.0, 0.0)
    with pytest.raises(ZeroBaseline):
        underestimation(0.0, 1.0)
    with pytest.raises(ZeroBaseline):
        share(1.0, 0.0)


def test_e2e_totals():
    idle = dict(zip(NODES, (5.2, 161.4, 129.6, 15.9, 6.0)))
    assert e2e_total(idle).total == pytest.approx(5.2 + 161.4 + 129.6 + 15.9 + 6.0) == pytest.approx(318.1)
    two = dict(zip(NODES, (6.39, 167.13, 221.32, 16.03, 7.46)))
    assert e2e_total(two).total == pytest.approx(418.33)
    one = e2e_total({"edge": 129.6})
    assert (one.total, one.partial, "core" in one.missing) == (129.6, True, True)
    assert not e2e_total(idle).partial


@given(st.dictionaries(st.sampled_from(NODES), st.floats(0, 1e3)), st.randoms())
def test_e2e_commutative(means, rnd):
    items = list(means.items())
    rnd.shuffle(items)
    assert e2e_total(dict(items)).total == pytest.approx(sum(means.values()), abs=1e-9)


def _run(cfg, levels, n=60):
    return cfg, [series(np.full(n, v), node, src) for (node, src), v in levels.items()]


EDGE = {("edge", "hardware"): 133.6, ("edge", "host"): 106.85, ("edge", "container:renderer"): 20.68}


def test_idle_only_report_has_no_increases():
    rep = build_report([_run(ScenarioConfig(campaign="comparison", scenario=IDLE, duration=60), EDGE)])
    [row] = rep.comparison
    assert row.hardware_increase is None and row.baseline is None
    assert rep.gap_model is None and not rep.warnings


def test_missing_baseline():
    cfg = ScenarioConfig(campaign="comparison", scenario=ONE_ACTIVE, bitrate=10, duration=60)
    runs = [_run(cfg, EDGE)]
    with pytest.raises(MissingBaseline):
        build_report(runs, require_baseline=True)
    rep = build_report(runs)
    assert rep.comparison[0].host_increase is None
    assert any("baseline" in w for w in rep.warnings)
    assert "(n/a)" in render_tables(rep)["table2.txt"]


def test_full_report_self_consistent(calibrated_experiment):
    _, rep = calibrated_experiment
    for row in rep.comparison:
        run = rep.run(row.label)
        hw, host, rend = (run.mean("edge", s) for s in ("hardware", "host", "container:renderer"))
        assert (row.hardware, row.host, row.renderer) == (hw, host, rend)
        assert abs(row.underestimation - 100 * (host - hw) / hw) < 0.01
        assert abs(row.container_share - 100 * rend / host) < 0.01
        if row.baseline:
            base = rep.run(row.baseline)
            assert abs(row.hardware_increase - 100 * (hw / base.mean("edge", "hardware") - 1)) < 0.01
            assert abs(row.host_increase - 100 * (host / base.mean("edge", "host") - 1)) < 0.01
            assert abs(row.renderer_increase - 100 * (rend / base.mean("edge", "container:renderer") - 1)) < 0.01
    for row in rep.e2e:
        run = rep.run(row.label)
        assert abs(row.total - sum(run.mean(n, "hardware") for n in NODES)) < 0.01
        if row.increases:
            base = rep.run(row.baseline)
            for n, inc in row.increases.items():
                assert abs(inc - 100 * (run.mean(n, "hardware") / base.mean(n, "hardware") - 1)) < 0.01
    [step] = rep.steps
    assert abs(step.increase - 100 * (step.on.mean / step.off.mean - 1)) < 0.01


def test_report_schema_and_reload(calibrated_experiment):
    directory, rep = calibrated_experiment
    doc = json.loads((directory / "report" / "report.json").read_text())
    jsonschema.validate(doc, report_json_schema())
    assert EnergyReport.model_validate(doc).to_json() == rep.to_json()
    assert doc["metadata"]["std"] == "population"


def test_tables_rendered(calibrated_experiment):
    directory, _ = calibrated_experiment
    for k in range(1, 5):
        assert (directory / "report" / f"table{k}.txt").read_text().strip()
    t3 = (directory / "report" / "table3.txt").read_text()
    assert "E2E" in t3 and " W " in t3


def test_export_trace_files(tmp_path):
    s = [series(np.arange(5.0) + k, "edge", src) for k, src in enumerate(("hardware", "host", "container:renderer"))]
    files = export_trace(s, tmp_path)
    assert len(files) == 4 and files[-1].name == "combined.csv"
    back = [x for f in files[:-1] for x in read_csv(f)]
    assert sorted(back, key=lambda x: x.key) == sorted(s, key=lambda x: x.key)
    header = files[-1].read_text().splitlines()[0]
    assert header == "t_rel_s,edge/container:renderer,edge/hardware,edge/host"


def test_export_trace_empty(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert export_trace([], tmp_path / "none") == []
    assert not (tmp_path / "none").exists()
    assert "no series" in caplog.text
