"""Command line entry point: ``dualwatt run|report|mock-meter|replay``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from pydantic import ValidationError

from . import NODES, __version__
from .collector import StorageError
from .logs import configure_logging, log_context
from .meterwire import MeterBindError, MeterServer, MockMeter, MockMeterConfig, constant_trace
from .orchestrator import (
    ExperimentExists,
    ExperimentNotFound,
    override_scenarios,
    plan_from_file,
    replay_traces,
    report_experiment,
    run_experiment,
)
from .testbedsim import Calibration, CalibrationError, ScenarioError

log = logging.getLogger("dualwatt.cli")

OK, VALIDATION, RUNTIME, MISSING = 0, 2, 3, 4
OUT_ENV = "DUALWATT_OUT"


class UsageError(ValueError):
    pass


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "out")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed {text} is not an unsigned 64-bit integer")
    return v


def cmd_run(args) -> int:
    overrides = {"output_dir": _out_dir(args)}
    if args.experiment_id:
        overrides["experiment_id"] = args.experiment_id
    plan = plan_from_file(args.plan, extrapolate=args.extrapolate, **overrides)
    plan = override_scenarios(plan, seed=args.seed, duration=args.duration, extrapolate=args.extrapolate)
    with log_context(experiment_id=plan.experiment_id):
        log.info("running %d scenario(s) into %s", len(plan.scenarios), plan.directory)
        directory = run_experiment(plan, force=args.force, parallel=args.parallel)
        if args.report:
            report_experiment(directory)
        log.info("run complete")
    print(directory)
    return OK


def cmd_report(args) -> int:
    directory = _out_dir(args) / args.experiment_id
    with log_context(experiment_id=args.experiment_id):
        report = report_experiment(directory)
        for w in report.warnings:
            log.warning(w)
    print(directory / "report")
    return OK


def _channel(text: str) -> tuple[int, str, float]:
    try:
        cid, rest = text.split("=", 1)
        name, watts = rest.split(":", 1)
        return int(cid), name, float(watts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ID=NAME:WATTS, got {text!r}") from None


def cmd_mock_meter(args) -> int:
    if args.channel:
        channels = {cid: name for cid, name, _ in args.channel}
        watts = {cid: w for cid, _, w in args.channel}
    else:
        cal = Calibration.load(args.calibration)
        channels = {i + 1: n for i, n in enumerate(NODES)}
        watts = {
            i + 1: cal.hardware_level("e2e", "Idle_UEs", None, 100, n) for i, n in enumerate(NODES)
        }
    if any(w < 0 for w in watts.values()):
        raise UsageError("channel power must be non-negative")
    server = MeterServer(MockMeter(MockMeterConfig(channels=channels, host=args.host, port=args.port),
                                   constant_trace(watts)))
    print(server.url, flush=True)
    server.serve_forever()
    return OK


def cmd_replay(args) -> int:
    out = Path(args.out) if args.out else Path(args.traces) / "replay"
    replay_traces(Path(args.traces), out)
    print(out)
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualwatt", description="Dual-path (metered vs software) power experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--log-level", default="INFO")
    sub = p.add_subparsers(dest="command", required=True)

    def out_flag(sp):
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")

    r = sub.add_parser("run", help="simulate, serve and scrape every scenario of a plan")
    r.add_argument("--plan", help="JSON experiment plan (default: the full calibrated matrix)")
    r.add_argument("--id", dest="experiment_id", help="experiment id (overrides the plan)")
    r.add_argument("--seed", type=_u64)
    r.add_argument("--duration", type=float, help="simulated seconds per scenario")
    r.add_argument("--force", action="store_true", help="replace an existing experiment")
    r.add_argument("--parallel", action="store_true", help="run scenarios concurrently on distinct ports")
    r.add_argument("--extrapolate", action="store_true", help="allow points off the calibrated grid")
    r.add_argument("--report", action="store_true", help="write the report right after the run")
    out_flag(r)
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="write tables, report JSON and traces for a stored experiment")
    rep.add_argument("experiment_id")
    out_flag(rep)
    rep.set_defaults(func=cmd_report)

    m = sub.add_parser("mock-meter", help="serve a constant-power mock meter until interrupted")
    m.add_argument("--host", default="127.0.0.1")
    m.add_argument("--port", type=int, default=8080)
    m.add_argument("--channel", action="append", type=_channel, metavar="ID=NAME:WATTS")
    m.add_argument("--calibration", default="builtin")
    m.set_defaults(func=cmd_mock_meter)

    rp = sub.add_parser("replay", help="rebuild the report from exported CSV traces")
    rp.add_argument("traces", help="a traces/ directory written by 'report'")
    out_flag(rp)
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return VALIDATION if exc.code else OK
    configure_logging(args.log_level.upper())
    try:
        return args.func(args)
    except (ValidationError, ScenarioError, UsageError, ExperimentExists, CalibrationError,
            json.JSONDecodeError) as exc:
        log.error("invalid input: %s", exc)
        return VALIDATION
    except (ExperimentNotFound, FileNotFoundError) as exc:
        log.error("missing data: %s", exc)
        return MISSING
    except (MeterBindError, StorageError, OSError, RuntimeError) as exc:
        log.error("run failed: %s", exc)
        return RUNTIME
    except KeyboardInterrupt:
        return OK


if __name__ == "__main__":
    sys.exit(main())
