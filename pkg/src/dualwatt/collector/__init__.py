from .exposition import METRIC, ExpositionError, ExpositionSample, emit_exposition, parse_exposition
from .scheduler import ScrapeScheduler, ScrapeTarget, SimClock, TargetStatus, schedule_scrapes
from .series import (
    CSV_HEADER,
    HARDWARE,
    HOST,
    PowerSeries,
    RawSample,
    SampleBeforeEpoch,
    SeriesError,
    WindowOutsideSeries,
    align_relative,
    container_source,
    group_raw,
    integrate_energy,
    read_csv,
    write_csv,
)
from .storage import OutOfOrderAppend, SampleBlock, StorageError, TimeSeriesStore, query_range, store_append

__all__ = [
    "CSV_HEADER",
    "ExpositionError",
    "ExpositionSample",
    "HARDWARE",
    "HOST",
    "METRIC",
    "OutOfOrderAppend",
    "PowerSeries",
    "RawSample",
    "SampleBeforeEpoch",
    "SampleBlock",
    "ScrapeScheduler",
    "ScrapeTarget",
    "SeriesError",
    "SimClock",
    "StorageError",
    "TargetStatus",
    "TimeSeriesStore",
    "WindowOutsideSeries",
    "align_relative",
    "container_source",
    "emit_exposition",
    "group_raw",
    "integrate_energy",
    "parse_exposition",
    "query_range",
    "read_csv",
    "schedule_scrapes",
    "store_append",
    "write_csv",
]
