from .report import (
    E2ERow,
    EdgeComparison,
    EnergyReport,
    GapFit,
    MissingBaseline,
    RendererStep,
    RunSummary,
    build_report,
    export_trace,
    render_tables,
    report_json_schema,
    summary_csv,
    write_report,
)
from .stats import (
    DEFAULT_WARMUP,
    AnalysisError,
    E2ETotal,
    EmptyAfterTrim,
    SummaryStats,
    ZeroBaseline,
    e2e_total,
    percent_increase,
    share,
    summarize,
    underestimation,
)

__all__ = [
    "DEFAULT_WARMUP",
    "AnalysisError",
    "E2ERow",
    "E2ETotal",
    "EdgeComparison",
    "EmptyAfterTrim",
    "EnergyReport",
    "GapFit",
    "MissingBaseline",
    "RendererStep",
    "RunSummary",
    "SummaryStats",
    "ZeroBaseline",
    "build_report",
    "e2e_total",
    "export_trace",
    "percent_increase",
    "render_tables",
    "report_json_schema",
    "share",
    "summarize",
    "summary_csv",
    "underestimation",
    "write_report",
]
