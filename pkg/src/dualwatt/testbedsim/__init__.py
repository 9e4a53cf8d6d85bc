from .calibration import (
    Calibration,
    CalibrationError,
    DegenerateGap,
    GapModel,
    Levels,
    UncalibratedPoint,
    fit_gap_model,
    resolve_levels,
)
from .config import (
    BANDWIDTHS,
    BITRATES,
    IDLE,
    ONE_ACTIVE,
    SCENARIOS,
    TWO_ACTIVE,
    ScenarioConfig,
    ScenarioError,
    calibrated_matrix,
)
from .model import EPOCH_MS, RENDERER_POD, SimModel, TickOutput, broadcast_load, build_scenario

__all__ = [
    "BANDWIDTHS",
    "BITRATES",
    "Calibration",
    "CalibrationError",
    "DegenerateGap",
    "EPOCH_MS",
    "GapModel",
    "IDLE",
    "Levels",
    "ONE_ACTIVE",
    "RENDERER_POD",
    "SCENARIOS",
    "ScenarioConfig",
    "ScenarioError",
    "SimModel",
    "TWO_ACTIVE",
    "TickOutput",
    "UncalibratedPoint",
    "broadcast_load",
    "build_scenario",
    "fit_gap_model",
    "calibrated_matrix",
    "resolve_levels",
]
