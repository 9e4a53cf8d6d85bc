"""Experiment runs: simulator behind a mock meter, scraped into the store.

Directory layout for one experiment::

    <output_dir>/<experiment_id>/
        plan.json          the resolved plan (scenario configs, epoch)
        series/            time-series store, ids ``<run label>/<node>/<source>``
        report/            tables, report.json, summary.csv  (``report``)
        traces/            per-run CSV traces                  (``report``)
"""

from __future__ import annotations

import json
import logging
import re
import shutil
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import NODES
from .analysis import EnergyReport, build_report, export_trace, write_report
from .collector import (
    PowerSeries,
    RawSample,
    ScrapeScheduler,
    ScrapeTarget,
    SimClock,
    TimeSeriesStore,
    align_relative,
    read_csv,
)
from .collector.telemetry import SimTelemetryExporter
from .logs import log_context
from .meterwire import MeterServer, MockMeter, MockMeterConfig
from .testbedsim import EPOCH_MS, Calibration, ScenarioConfig, build_scenario, calibrated_matrix

log = logging.getLogger(__name__)

PLAN_FILE = "plan.json"
CHANNELS = {i + 1: node for i, node in enumerate(NODES)}
_ID = re.compile(r"^[A-Za-z0-9_.-]+$")


class ExperimentExists(FileExistsError):
    pass


class ExperimentNotFound(FileNotFoundError):
    pass


class ScenarioFailed(RuntimeError):
    pass


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment_id: str = "calibrated"
    scenarios: list[ScenarioConfig] = Field(min_length=1)
    output_dir: Path = Path("out")
    calibration: str = "builtin"
    meter_port: int = Field(default=0, ge=0, le=65535)
    epoch_ms: int = EPOCH_MS

    @field_validator("experiment_id")
    @classmethod
    def _safe_id(cls, v: str) -> str:
        if not _ID.match(v) or v in (".", ".."):
            raise ValueError(f"experiment id {v!r} must be a plain file name")
        return v

    @field_validator("scenarios")
    @classmethod
    def _unique_labels(cls, v: list[ScenarioConfig]) -> list[ScenarioConfig]:
        labels = [c.label for c in v]
        dup = sorted({x for x in labels if labels.count(x) > 1})
        if dup:
            raise ValueError(f"scenarios repeat: {dup}")
        return v

    @property
    def directory(self) -> Path:
        return self.output_dir / self.experiment_id

    @classmethod
    def load(cls, path: str | Path) -> ExperimentPlan:
        return cls.model_validate_json(Path(path).read_text())

    def to_json(self) -> str:
        return self.model_dump_json(indent=2, exclude={"output_dir"}) + "\n"


def default_plan(**overrides) -> ExperimentPlan:
    """The full calibrated matrix (11 runs) with the toggle at half time."""
    duration = overrides.pop("duration", 300.0)
    seed = overrides.pop("seed", 42)
    return ExperimentPlan(scenarios=calibrated_matrix(duration=duration, seed=seed), **overrides)


def override_scenarios(
    plan: ExperimentPlan,
    seed: int | None = None,
    duration: float | None = None,
    extrapolate: bool | None = None,
) -> ExperimentPlan:
    """Apply command-line overrides to every scenario.

    A new duration moves any renderer toggle proportionally so it stays inside
    the run.
    """
    scenarios = []
    for cfg in plan.scenarios:
        data = cfg.model_dump()
        if seed is not None:
            data["seed"] = seed
        if duration is not None:
            if cfg.renderer_on_at is not None:
                data["renderer_on_at"] = cfg.renderer_on_at * duration / cfg.duration
            data["duration"] = duration
        if extrapolate:
            data["extrapolate"] = True
        scenarios.append(ScenarioConfig.model_validate(data))
    return plan.model_copy(update={"scenarios": scenarios})


def series_id(label: str, node: str, source: str) -> str:
    return f"{label}/{node}/{source}"


def run_scenario(cfg: ScenarioConfig, cal: Calibration, store: TimeSeriesStore, port: int = 0,
                 epoch_ms: int = EPOCH_MS) -> dict[str, int]:
    """Simulate one run, serve its meter over HTTP and scrape both paths.

    Returns sample counts per stored series.
    """
    model = build_scenario(cfg, cal)
    clock = SimClock(epoch=epoch_ms / 1000.0)

    def trace(channel_id: int, now: float) -> float | None:
        try:
            return model.true_power(CHANNELS[channel_id], round(now - clock.epoch, 6))
        except ValueError:
            return None  # past the end of the run

    meter = MockMeter(MockMeterConfig(channels=CHANNELS, port=port), trace, clock=clock)
    counts: dict[str, int] = {}
    with log_context(scenario=cfg.label), MeterServer(meter) as server:
        targets = [
            ScrapeTarget("meter", "meter", server.url, interval=cfg.tick, channel_map=CHANNELS),
            ScrapeTarget("edge-telemetry", "telemetry", SimTelemetryExporter(model, clock), interval=cfg.tick),
        ]
        log.info("scenario started on %s", server.url)
        with ScrapeScheduler(targets) as sched:
            for raw in sched.run_virtual(clock, cfg.duration):
                sid = series_id(cfg.label, raw.node_id, raw.source)
                store.append(sid, raw.timestamp, raw.power)
                counts[sid] = counts.get(sid, 0) + 1
            failed = {name: st.failures for name, st in sched.status.items() if st.failures}
        if failed:
            log.warning("scrape failures: %s", failed)
        if not counts:
            raise ScenarioFailed(f"{cfg.label}: no samples collected")
        log.info("scenario finished: %d series, %d samples", len(counts), sum(counts.values()))
    return counts


def run_experiment(plan: ExperimentPlan, force: bool = False, parallel: bool = False) -> Path:
    """Run every scenario of ``plan`` and return the experiment directory."""
    directory = plan.directory
    if directory.exists():
        if not force:
            raise ExperimentExists(f"{directory} exists; pass --force to overwrite")
        shutil.rmtree(directory)
    cal = Calibration.load(plan.calibration)
    directory.mkdir(parents=True)
    (directory / PLAN_FILE).write_text(plan.to_json())

    with log_context(experiment_id=plan.experiment_id), TimeSeriesStore(directory / "series") as store:
        if parallel:
            def one(cfg: ScenarioConfig):
                with log_context(experiment_id=plan.experiment_id):
                    return run_scenario(cfg, cal, store, port=0, epoch_ms=plan.epoch_ms)

            with ThreadPoolExecutor(max_workers=min(8, len(plan.scenarios))) as pool:
                futures = [pool.submit(one, cfg) for cfg in plan.scenarios]
                errors = [f.exception() for f in futures if f.exception() is not None]
            if errors:
                raise errors[0]
        else:
            for cfg in plan.scenarios:
                run_scenario(cfg, cal, store, port=plan.meter_port, epoch_ms=plan.epoch_ms)
        store.flush(fsync=True)
    return directory


def load_plan(directory: Path) -> ExperimentPlan:
    plan_path = directory / PLAN_FILE
    if not plan_path.is_file():
        raise ExperimentNotFound(f"no experiment at {directory}")
    return ExperimentPlan.load(plan_path).model_copy(update={"output_dir": directory.parent})


def load_runs(directory: Path) -> tuple[ExperimentPlan, list[tuple[ScenarioConfig, list[PowerSeries]]]]:
    """Read stored series back as relative-time traces, one entry per run."""
    plan = load_plan(directory)
    runs = []
    with TimeSeriesStore(directory / "series") as store:
        ids = store.series_ids()
        for cfg in plan.scenarios:
            series = []
            for sid in ids:
                label, node, source = sid.split("/", 2)
                if label != cfg.label:
                    continue
                block = store.query_range(sid)
                raw = (RawSample(node, source, ts, v) for ts, v in block)
                series.append(align_relative(raw, plan.epoch_ms, node, source))
            if not series:
                raise ExperimentNotFound(f"{directory}: no stored series for {cfg.label}")
            runs.append((cfg, series))
    return plan, runs


def report_experiment(directory: Path, calibration_version: str | None = None) -> EnergyReport:
    """Build the report for a stored experiment and write tables and traces."""
    plan, runs = load_runs(directory)
    version = calibration_version or Calibration.load(plan.calibration).version
    report = build_report(runs, experiment_id=plan.experiment_id, calibration_version=version)
    write_report(report, directory / "report")
    traces = directory / "traces"
    if traces.exists():
        shutil.rmtree(traces)
    traces.mkdir()
    (traces / PLAN_FILE).write_text(plan.to_json())
    for cfg, series in runs:
        export_trace(series, traces / cfg.label)
    return report


def replay_traces(trace_dir: Path, out_dir: Path | None = None) -> EnergyReport:
    """Rebuild a report from exported CSV traces (the output of ``report``)."""
    trace_dir = Path(trace_dir)
    plan = load_plan(trace_dir)
    runs = []
    for cfg in plan.scenarios:
        run_dir = trace_dir / cfg.label
        files = sorted(p for p in run_dir.glob("*.csv") if p.name != "combined.csv") if run_dir.is_dir() else []
        if not files:
            raise ExperimentNotFound(f"{run_dir}: no trace files")
        runs.append((cfg, [s for f in files for s in read_csv(f)]))
    report = build_report(
        runs, experiment_id=plan.experiment_id, calibration_version=Calibration.load(plan.calibration).version
    )
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def plan_from_file(path: Optional[str | Path], extrapolate: bool = False, **overrides) -> ExperimentPlan:
    """Load a JSON plan; ``extrapolate`` is applied before grid validation."""
    if path is None:
        return default_plan(**overrides)
    data = json.loads(Path(path).read_text())
    data.update(overrides)
    if extrapolate and isinstance(data.get("scenarios"), list):
        data["scenarios"] = [{**s, "extrapolate": True} if isinstance(s, dict) else s for s in data["scenarios"]]
    return ExperimentPlan.model_validate(data)
