"""Energy report: per-run summaries, derived ratios, rendered tables, traces."""

from __future__ import annotations

import csv
import io
import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

from pydantic import BaseModel, Field

from .. import NODES, __version__
from ..collector import HARDWARE, HOST, PowerSeries, container_source, write_csv
from ..testbedsim import IDLE, ONE_ACTIVE, ScenarioConfig, fit_gap_model
from ..testbedsim.model import RENDERER_POD
from .stats import DEFAULT_WARMUP, SummaryStats, e2e_total, percent_increase, share, summarize, underestimation

log = logging.getLogger(__name__)

RENDERER = container_source(RENDERER_POD)
REPORT_SCHEMA_VERSION = 1
NODE_TITLES = {"core": "Core", "gnodeb": "gNodeB", "edge": "Edge", "ue1": "UE 1 (CPE)", "ue2": "UE 2 (CPE)"}

Run = tuple[ScenarioConfig, Sequence[PowerSeries]]


class MissingBaseline(ValueError):
    pass


def cell_key(node: str, source: str) -> str:
    return f"{node}/{source}"


class RunSummary(BaseModel):
    label: str
    config: ScenarioConfig
    cells: dict[str, SummaryStats]

    def mean(self, node: str, source: str) -> float:
        return self.cells[cell_key(node, source)].mean


class EdgeComparison(BaseModel):
    """Metered vs host-OS vs renderer-pod power at the edge for one run."""

    label: str
    baseline: Optional[str] = None
    hardware: float
    host: float
    renderer: float
    hardware_increase: Optional[float] = None
    host_increase: Optional[float] = None
    renderer_increase: Optional[float] = None
    underestimation: float
    container_share: float


class E2ERow(BaseModel):
    label: str
    baseline: Optional[str] = None
    nodes: dict[str, float]
    total: float
    partial: bool
    increases: Optional[dict[str, float]] = None


class RendererStep(BaseModel):
    label: str
    switch_at: float
    off: SummaryStats
    on: SummaryStats
    increase: float


class GapFit(BaseModel):
    alpha: float
    beta: float
    host_idle: float
    idle_run: str
    active_run: str


class ReportMetadata(BaseModel):
    experiment_id: str
    generator: str = f"dualwatt {__version__}"
    calibration_version: str
    warmup_s: float
    std: str = "population"
    seeds: list[int]


class EnergyReport(BaseModel):
    schema_version: int = REPORT_SCHEMA_VERSION
    metadata: ReportMetadata
    runs: list[RunSummary]
    comparison: list[EdgeComparison] = Field(default_factory=list)
    e2e: list[E2ERow] = Field(default_factory=list)
    steps: list[RendererStep] = Field(default_factory=list)
    gap_model: Optional[GapFit] = None
    warnings: list[str] = Field(default_factory=list)

    def run(self, label: str) -> RunSummary:
        for r in self.runs:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def report_json_schema() -> dict:
    return EnergyReport.model_json_schema(mode="serialization")


def _expected(cfg: ScenarioConfig, start: float, stop: float | None = None) -> int:
    stop = cfg.duration if stop is None else stop
    return sum(1 for k in range(cfg.n_ticks) if start <= k * cfg.tick < stop)


def _baseline(runs: list[RunSummary], cfg: ScenarioConfig) -> RunSummary | None:
    idle = [r for r in runs if r.config.scenario == IDLE and r.config.campaign == cfg.campaign
            and r.config.renderer_on_at is None]
    same_bw = [r for r in idle if r.config.bandwidth == cfg.bandwidth]
    pool = same_bw or idle
    return pool[0] if pool else None


def _has(run: RunSummary, *keys: tuple[str, str]) -> bool:
    return all(cell_key(*k) in run.cells for k in keys)


def build_report(
    runs: Iterable[Run],
    experiment_id: str = "experiment",
    calibration_version: str = "builtin",
    warmup: float = DEFAULT_WARMUP,
    require_baseline: bool = False,
) -> EnergyReport:
    """Summarize every stored series and derive increases, gaps and totals.

    With ``require_baseline`` a missing Idle_UEs run is an error; otherwise the
    increase fields stay empty and a warning is recorded.
    """
    runs = list(runs)
    summaries: list[RunSummary] = []
    warnings: list[str] = []
    steps: list[RendererStep] = []
    for cfg, series in runs:
        cells = {}
        for s in sorted(series, key=lambda s: (s.node_id, s.source)):
            stats = summarize(s, warmup, _expected(cfg, warmup))
            if stats.degraded:
                warnings.append(f"{cfg.label}: {s.node_id}/{s.source} coverage {stats.coverage:.2f}")
            cells[cell_key(s.node_id, s.source)] = stats
        summaries.append(RunSummary(label=cfg.label, config=cfg, cells=cells))
        if cfg.renderer_on_at is not None:
            edge = next((s for s in series if s.key == ("edge", HARDWARE)), None)
            if edge is not None:
                on_at = cfg.renderer_on_at
                off = summarize(edge.window(0.0, on_at), warmup, _expected(cfg, warmup, on_at))
                on = summarize(edge.window(on_at + warmup), 0.0, _expected(cfg, on_at + warmup))
                steps.append(
                    RendererStep(label=cfg.label, switch_at=on_at, off=off, on=on,
                                 increase=percent_increase(on.mean, off.mean))
                )

    labels = [s.label for s in summaries]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate run labels: {labels}")

    steady = [r for r in summaries if r.config.renderer_on_at is None]
    comparison: list[EdgeComparison] = []
    e2e: list[E2ERow] = []
    edge_keys = (("edge", HARDWARE), ("edge", HOST), ("edge", RENDERER))
    for r in steady:
        base = _baseline(summaries, r.config) if r.config.scenario != IDLE else None
        if r.config.scenario != IDLE and base is None:
            msg = f"{r.label}: no Idle_UEs baseline in campaign {r.config.campaign}; increases omitted"
            if require_baseline:
                raise MissingBaseline(msg)
            warnings.append(msg)
        if r.config.campaign == "comparison" and _has(r, *edge_keys):
            hw, host, rend = (r.mean(*k) for k in edge_keys)
            row = EdgeComparison(
                label=r.label, hardware=hw, host=host, renderer=rend,
                underestimation=underestimation(hw, host), container_share=share(rend, host),
            )
            if base is not None and _has(base, *edge_keys):
                row.baseline = base.label
                row.hardware_increase = percent_increase(hw, base.mean("edge", HARDWARE))
                row.host_increase = percent_increase(host, base.mean("edge", HOST))
                row.renderer_increase = percent_increase(rend, base.mean("edge", RENDERER))
            comparison.append(row)
        if r.config.campaign == "e2e":
            means = {n: r.mean(n, HARDWARE) for n in NODES if cell_key(n, HARDWARE) in r.cells}
            tot = e2e_total(means)
            row = E2ERow(label=r.label, nodes=means, total=tot.total, partial=tot.partial)
            if base is not None:
                row.baseline = base.label
                row.increases = {
                    n: percent_increase(v, base.mean(n, HARDWARE))
                    for n, v in means.items() if cell_key(n, HARDWARE) in base.cells
                }
            e2e.append(row)

    gap = None
    cfg_of = {r.label: r.config for r in summaries}
    idle_rows = [c for c in comparison if cfg_of[c.label].scenario == IDLE]
    active_rows = [c for c in comparison if cfg_of[c.label].scenario == ONE_ACTIVE]
    if idle_rows and active_rows:
        idle_row = idle_rows[0]
        active_row = min(active_rows, key=lambda c: cfg_of[c.label].bitrate)
        try:
            g = fit_gap_model((idle_row.hardware, idle_row.host), (active_row.hardware, active_row.host))
            gap = GapFit(alpha=g.alpha, beta=g.beta, host_idle=g.host_idle,
                         idle_run=idle_row.label, active_run=active_row.label)
        except ValueError as exc:
            warnings.append(f"gap model not fitted: {exc}")

    return EnergyReport(
        metadata=ReportMetadata(
            experiment_id=experiment_id,
            calibration_version=calibration_version,
            warmup_s=warmup,
            seeds=sorted({cfg.seed for cfg, _ in runs}),
        ),
        runs=summaries,
        comparison=comparison,
        e2e=e2e,
        steps=steps,
        gap_model=gap,
        warnings=warnings,
    )


# -- rendering -------------------------------------------------------------


def _w(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.2f} W"


def _pct(x: float | None) -> str:
    return "(n/a)" if x is None else f"({x:+.2f}%)"


def _grid(title: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"

    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    out = [title, sep, line(header), sep]
    out += [line(r) for r in rows]
    out.append(sep)
    return "\n".join(out) + "\n"


def _media(report: EnergyReport, label: str) -> str:
    return report.run(label).config.media or "-"


def render_tables(report: EnergyReport) -> dict[str, str]:
    """Text tables keyed by file name (``table1.txt`` ... ``table4.txt``)."""
    scen = {r.label: r.config for r in report.runs}
    tables = {}

    idle = [c for c in report.comparison if scen[c.label].scenario == IDLE]
    tables["table1.txt"] = _grid(
        "Edge node average power, Idle_UEs",
        ["Bandwidth", "Hardware", "Host OS", "Remote Renderer", "Host vs HW", "Pod share of host"],
        [
            [f"{scen[c.label].bandwidth} MHz", _w(c.hardware), _w(c.host), _w(c.renderer),
             f"{c.underestimation:+.2f}%", f"{c.container_share:.2f}%"]
            for c in idle
        ],
    )

    active = sorted(
        (c for c in report.comparison if scen[c.label].scenario != IDLE),
        key=lambda c: (scen[c.label].bandwidth, scen[c.label].bitrate),
    )
    tables["table2.txt"] = _grid(
        "Edge node average power, active UE (increase vs Idle_UEs)",
        ["Multimedia", "Hardware", "Host OS", "Remote Renderer", "Host vs HW", "Pod share of host"],
        [
            [_media(report, c.label),
             f"{_w(c.hardware)} {_pct(c.hardware_increase)}",
             f"{_w(c.host)} {_pct(c.host_increase)}",
             f"{_w(c.renderer)} {_pct(c.renderer_increase)}",
             f"{c.underestimation:+.2f}%", f"{c.container_share:.2f}%"]
            for c in active
        ],
    )

    node_cols = [NODE_TITLES[n] for n in NODES] + ["E2E"]

    def node_cells(row: E2ERow) -> list[str]:
        total = f"{row.total:.2f} W" + (" (partial)" if row.partial else "")
        return [_w(row.nodes.get(n)) for n in NODES] + [total]

    e2e_idle = [r for r in report.e2e if scen[r.label].scenario == IDLE]
    tables["table3.txt"] = _grid(
        "Average power per network element, Idle_UEs",
        ["Bandwidth"] + node_cols,
        [[f"{scen[r.label].bandwidth} MHz"] + node_cells(r) for r in e2e_idle],
    )
    e2e_active = sorted(
        (r for r in report.e2e if scen[r.label].scenario != IDLE),
        key=lambda r: (scen[r.label].scenario, scen[r.label].bandwidth, scen[r.label].bitrate),
    )
    rows = []
    for r in e2e_active:
        cfg = scen[r.label]
        rows.append([cfg.scenario, f"{cfg.bandwidth} MHz", cfg.media or "-"] + node_cells(r))
        inc = r.increases
        rows.append(["", "", "vs idle"] + [_pct(None if inc is None else inc.get(n)) for n in NODES] + [""])
    tables["table4.txt"] = _grid(
        "Average power per network element, active UEs", ["Scenario", "Bandwidth", "Multimedia"] + node_cols, rows
    )

    if report.steps:
        tables["steps.txt"] = _grid(
            "Edge power with the renderer switched on mid-run",
            ["Run", "Switch at", "Renderer off", "Renderer on", "Increase"],
            [[s.label, f"{s.switch_at:g} s", _w(s.off.mean), _w(s.on.mean), f"{s.increase:+.2f}%"]
             for s in report.steps],
        )
    return tables


def summary_csv(report: EnergyReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("run", "node", "source", "mean_w", "std_w", "n", "coverage"))
    for r in report.runs:
        for key, st in r.cells.items():
            node, source = key.split("/", 1)
            w.writerow((r.label, node, source, f"{st.mean:.6f}", f"{st.std:.6f}", st.n, f"{st.coverage:.4f}"))
    return buf.getvalue()


def write_report(report: EnergyReport, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in render_tables(report).items():
        (out_dir / name).write_text(text)
        written.append(out_dir / name)
    (out_dir / "report.json").write_text(report.to_json())
    (out_dir / "summary.csv").write_text(summary_csv(report))
    written += [out_dir / "report.json", out_dir / "summary.csv"]
    return written


# -- traces ----------------------------------------------------------------


def _trace_name(s: PowerSeries) -> str:
    return f"{s.node_id}__{s.source.replace(':', '-')}.csv"


def export_trace(series: Iterable[PowerSeries], path: str | Path) -> list[Path]:
    """One CSV per series plus ``combined.csv`` (wide, one column per series)."""
    series = sorted(series, key=lambda s: s.key)
    if not series:
        log.warning("export_trace: no series to write to %s", path)
        return []
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    files = [write_csv([s], path / _trace_name(s)) for s in series]

    times = sorted({t for s in series for t in s.t.tolist()})
    lookup = [dict(zip(s.t.tolist(), s.power.tolist())) for s in series]
    combined = path / "combined.csv"
    with combined.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_rel_s"] + [f"{s.node_id}/{s.source}" for s in series])
        for t in times:
            w.writerow([repr(t)] + [repr(m[t]) if t in m else "" for m in lookup])
    files.append(combined)
    return files
