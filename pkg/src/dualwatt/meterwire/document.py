"""Smart power socket status document: domain model, encoder and parser.

The document follows the outlet-PDU layout (``Agent`` / ``GlobalMeasure`` /
``Outputs``), reduced to the fields consumed downstream.
"""

from __future__ import annotations

import json
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator


class MeterWireError(Exception):
    """Base class for every meter protocol failure."""


class MalformedDocument(MeterWireError):
    """Payload is not a decodable JSON document."""


class SchemaViolation(MeterWireError):
    """JSON is well formed but misses fields or carries out-of-range values."""


class InvariantViolation(MeterWireError):
    """Fields are individually valid but inconsistent with each other."""


class MeterTransportError(MeterWireError):
    """Endpoint unreachable or too slow. No sample is emitted."""

    def __init__(self, endpoint: str, attempts: int, timeout: float, cause: BaseException | None = None):
        self.endpoint = endpoint
        self.attempts = attempts
        self.timeout = timeout
        self.cause = cause
        super().__init__(
            f"meter {endpoint} unreachable after {attempts} attempt(s) (timeout {timeout:g}s): {cause!r}"
        )


class MeterBindError(MeterWireError):
    """Mock meter could not bind its listening socket."""


_STRICT = ConfigDict(frozen=True, populate_by_name=True, extra="ignore", allow_inf_nan=False)


def _lookup(data: dict, *keys: str) -> Any:
    for key in keys:
        if key in data:
            return data[key]
    return None


class OutputChannel(BaseModel):
    model_config = _STRICT

    id: int = Field(alias="ID", ge=1, le=255)
    name: str = Field(alias="Name")
    state: Literal[0, 1] = Field(alias="State")
    load: float = Field(alias="Load", ge=0)
    current: float = Field(default=0.0, alias="Current", ge=0)
    power_factor: float = Field(default=1.0, alias="PowerFactor", ge=0, le=1)
    energy: float = Field(default=0.0, alias="Energy", ge=0)

    @model_validator(mode="before")
    @classmethod
    def _absent_load(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        if _lookup(data, "Load", "load") is not None:
            return data
        state = _lookup(data, "State", "state")
        if state in (0, 1) and not isinstance(state, bool):
            if state == 1:
                raise InvariantViolation(f"channel {_lookup(data, 'ID', 'id')!r} is on but reports no load")
            data = {**data, "Load": 0.0}
            data.pop("load", None)
        return data

    @model_validator(mode="after")
    def _off_is_zero(self) -> OutputChannel:
        if self.state == 0 and (self.load != 0 or self.current != 0):
            raise InvariantViolation(
                f"channel {self.id} is off but reports load={self.load} current={self.current}"
            )
        return self


class MeterStatus(BaseModel):
    """One status snapshot of the whole device."""

    model_config = _STRICT

    device_name: str
    meter_time: int = Field(ge=0, description="device clock, unix milliseconds")
    voltage: float = Field(gt=0)
    frequency: float = Field(gt=0)
    outputs: tuple[OutputChannel, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _unique_ids(self) -> MeterStatus:
        ids = [ch.id for ch in self.outputs]
        if len(set(ids)) != len(ids):
            raise InvariantViolation(f"duplicate channel ids: {sorted(ids)}")
        return self

    def channel(self, channel_id: int) -> OutputChannel:
        for ch in self.outputs:
            if ch.id == channel_id:
                return ch
        raise KeyError(channel_id)


class _Agent(BaseModel):
    model_config = _STRICT
    DeviceName: str
    Time: int = Field(ge=0)


class _GlobalMeasure(BaseModel):
    model_config = _STRICT
    Voltage: float = Field(gt=0)
    Frequency: float = Field(gt=0)


class _Document(BaseModel):
    model_config = _STRICT
    Agent: _Agent
    GlobalMeasure: _GlobalMeasure
    Outputs: list[OutputChannel] = Field(min_length=1)


def _num(x: float) -> float | int:
    # zero goes out as a bare 0, as the device does for switched-off outlets
    return 0 if x == 0 else x


def status_to_document(status: MeterStatus) -> dict:
    return {
        "Agent": {"DeviceName": status.device_name, "Time": status.meter_time},
        "GlobalMeasure": {"Voltage": status.voltage, "Frequency": status.frequency},
        "Outputs": [
            {
                "ID": ch.id,
                "Name": ch.name,
                "State": ch.state,
                "Load": _num(ch.load),
                "Current": _num(ch.current),
                "PowerFactor": _num(ch.power_factor),
                "Energy": _num(ch.energy),
            }
            for ch in status.outputs
        ],
    }


def encode_meter_status(status: MeterStatus) -> bytes:
    """Serialize to the canonical compact JSON document."""
    return json.dumps(status_to_document(status), separators=(",", ":"), allow_nan=False).encode()


def parse_meter_status(raw: bytes | str) -> MeterStatus:
    """Parse a status document.

    Raises :class:`MalformedDocument`, :class:`SchemaViolation` or
    :class:`InvariantViolation`; unknown fields are ignored.
    """
    try:
        text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
        payload = json.loads(text)
    except (UnicodeDecodeError, ValueError, RecursionError) as exc:
        raise MalformedDocument(str(exc)) from exc
    if not isinstance(payload, dict):
        raise SchemaViolation(f"expected a JSON object, got {type(payload).__name__}")
    try:
        doc = _Document.model_validate(payload)
        return MeterStatus(
            device_name=doc.Agent.DeviceName,
            meter_time=doc.Agent.Time,
            voltage=doc.GlobalMeasure.Voltage,
            frequency=doc.GlobalMeasure.Frequency,
            outputs=tuple(doc.Outputs),
        )
    except ValidationError as exc:
        raise SchemaViolation(str(exc)) from exc
    except RecursionError as exc:
        raise MalformedDocument("document nested too deeply") from exc
