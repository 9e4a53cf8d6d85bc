from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field

from .. import NODES
from ..collector import PowerSeries

DEFAULT_WARMUP = 10.0
DEGRADED_COVERAGE = 0.9


class AnalysisError(ValueError):
    pass


class EmptyAfterTrim(AnalysisError):
    pass


class ZeroBaseline(AnalysisError):
    pass


class SummaryStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    std: float
    n: int
    coverage: float

    @computed_field
    @property
    def degraded(self) -> bool:
        return self.coverage < DEGRADED_COVERAGE


def summarize(series: PowerSeries, warmup: float = DEFAULT_WARMUP, expected: int | None = None) -> SummaryStats:
    """Mean and population std after dropping the first ``warmup`` seconds.

    ``expected`` is how many samples the trimmed window should hold; missing
    ticks lower ``coverage`` and are never interpolated.
    """
    p = series.power[series.t >= warmup]
    if len(p) == 0:
        raise EmptyAfterTrim(f"{series.node_id}/{series.source}: nothing left after {warmup}s warmup")
    coverage = 1.0 if not expected else min(len(p) / expected, 1.0)
    return SummaryStats(mean=float(np.mean(p)), std=float(np.std(p)), n=int(len(p)), coverage=coverage)


def percent_increase(active_mean: float, baseline_mean: float) -> float:
    if baseline_mean <= 0:
        raise ZeroBaseline(f"baseline mean {baseline_mean} W")
    return 100.0 * (active_mean - baseline_mean) / baseline_mean


def underestimation(hw_mean: float, sw_mean: float) -> float:
    """Signed software error relative to the meter; negative means underestimate."""
    if hw_mean <= 0:
        raise ZeroBaseline(f"hardware mean {hw_mean} W")
    return 100.0 * (sw_mean - hw_mean) / hw_mean


def share(part_mean: float, whole_mean: float) -> float:
    if whole_mean <= 0:
        raise ZeroBaseline(f"denominator {whole_mean} W")
    return 100.0 * part_mean / whole_mean


@dataclass(frozen=True)
class E2ETotal:
    total: float
    partial: bool
    missing: tuple[str, ...] = ()


def e2e_total(node_means: Mapping[str, float], nodes: tuple[str, ...] = NODES) -> E2ETotal:
    """Sum of per-node means; flagged partial when a testbed node is missing."""
    missing = tuple(n for n in nodes if n not in node_means)
    return E2ETotal(math.fsum(node_means.values()), bool(missing), missing)
