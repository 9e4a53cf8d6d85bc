from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

IDLE = "Idle_UEs"
ONE_ACTIVE = "1_active_UE"
TWO_ACTIVE = "2_active_UEs"
SCENARIOS = (IDLE, ONE_ACTIVE, TWO_ACTIVE)
BITRATES = (10, 25, 40)
BANDWIDTHS = (40, 100)

Scenario = Literal["Idle_UEs", "1_active_UE", "2_active_UEs"]
Campaign = Literal["comparison", "e2e"]


class ScenarioError(ValueError):
    pass


def active_ues(scenario: str) -> int:
    return {IDLE: 0, ONE_ACTIVE: 1, TWO_ACTIVE: 2}[scenario]


class ScenarioConfig(BaseModel):
    """One simulated experiment run.

    ``campaign`` picks which measurement set the run reproduces: ``comparison``
    (edge metered next to host/pod telemetry) or ``e2e`` (all five nodes on the
    power socket). ``renderer_on_at`` starts the run with the renderer stopped
    and switches it on at that time, for on/off step experiments.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    campaign: Campaign = "e2e"
    scenario: Scenario
    bitrate: Optional[float] = Field(default=None, description="Mbps; required iff a UE is active")
    bandwidth: int = 100
    duration: float = Field(default=300.0, gt=0)
    seed: int = Field(default=42, ge=0, lt=2**64)
    tick: float = Field(default=1.0, gt=0)
    renderer_on_at: Optional[float] = None
    extrapolate: bool = False

    @model_validator(mode="after")
    def _grid(self) -> ScenarioConfig:
        if self.scenario == IDLE:
            if self.bitrate is not None:
                raise ScenarioError("Idle_UEs runs stream nothing; bitrate must be unset")
            if self.renderer_on_at is not None:
                raise ScenarioError("renderer toggling needs an active scenario")
        else:
            if self.bitrate is None:
                raise ScenarioError(f"{self.scenario} needs a bitrate")
            if self.bitrate <= 0:
                raise ScenarioError(f"bitrate must be positive, got {self.bitrate}")
        if self.renderer_on_at is not None and not 0 < self.renderer_on_at < self.duration:
            raise ScenarioError("renderer_on_at must fall inside the run")
        if self.extrapolate:
            if self.bandwidth <= 0:
                raise ScenarioError(f"bandwidth must be positive, got {self.bandwidth}")
            return self
        if self.bandwidth not in BANDWIDTHS:
            raise ScenarioError(f"bandwidth {self.bandwidth} MHz not in {BANDWIDTHS} (use extrapolate)")
        if self.bitrate is not None and self.bitrate not in BITRATES:
            raise ScenarioError(f"bitrate {self.bitrate} Mbps not in {BITRATES} (use extrapolate)")
        if self.bandwidth == 40 and self.scenario != TWO_ACTIVE:
            raise ScenarioError("40 MHz was only measured with 2_active_UEs (use extrapolate)")
        return self

    @property
    def n_active(self) -> int:
        return active_ues(self.scenario)

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.tick))

    @property
    def media(self) -> str | None:
        if self.bitrate is None:
            return None
        return f"360_{self.bitrate:g}M"

    @property
    def label(self) -> str:
        parts = [self.campaign, self.scenario]
        if self.media:
            parts.append(self.media)
        parts.append(f"{self.bandwidth}MHz")
        if self.renderer_on_at is not None:
            parts.append(f"on@{self.renderer_on_at:g}s")
        return ".".join(parts)


def calibrated_matrix(duration: float = 300.0, seed: int = 42, tick: float = 1.0) -> list[ScenarioConfig]:
    """Every measured configuration, plus a renderer on/off step run."""
    common = dict(duration=duration, seed=seed, tick=tick)
    runs = [ScenarioConfig(campaign="comparison", scenario=IDLE, **common)]
    runs += [ScenarioConfig(campaign="comparison", scenario=ONE_ACTIVE, bitrate=b, **common) for b in BITRATES]
    runs.append(ScenarioConfig(campaign="e2e", scenario=IDLE, **common))
    runs += [ScenarioConfig(campaign="e2e", scenario=ONE_ACTIVE, bitrate=b, **common) for b in BITRATES]
    runs += [ScenarioConfig(campaign="e2e", scenario=TWO_ACTIVE, bitrate=40, bandwidth=bw, **common) for bw in BANDWIDTHS]
    runs.append(
        ScenarioConfig(campaign="e2e", scenario=TWO_ACTIVE, bitrate=40, renderer_on_at=duration / 2, **common)
    )
    return runs
