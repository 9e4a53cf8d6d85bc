from .client import DEFAULT_TIMEOUT, MeterClient, MeterSample, poll_meter, status_url
from .document import (
    InvariantViolation,
    MalformedDocument,
    MeterBindError,
    MeterStatus,
    MeterTransportError,
    MeterWireError,
    OutputChannel,
    SchemaViolation,
    encode_meter_status,
    parse_meter_status,
)
from .service import (
    STATUS_PATH,
    MeterServer,
    MockMeter,
    MockMeterConfig,
    constant_trace,
    create_app,
    serve_mock_meter,
)

__all__ = [
    "DEFAULT_TIMEOUT",
    "InvariantViolation",
    "MalformedDocument",
    "MeterBindError",
    "MeterClient",
    "MeterSample",
    "MeterServer",
    "MeterStatus",
    "MeterTransportError",
    "MeterWireError",
    "MockMeter",
    "MockMeterConfig",
    "OutputChannel",
    "STATUS_PATH",
    "SchemaViolation",
    "constant_trace",
    "create_app",
    "encode_meter_status",
    "parse_meter_status",
    "poll_meter",
    "serve_mock_meter",
    "status_url",
]
