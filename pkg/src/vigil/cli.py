"""Command-line front end.

    vigil run <file.vgl> [--trace out.jsonl] [--csv out.csv]
                         [--transcript out.jsonl] [--seed N] [--oracle]
                         [--set key=value]...
    vigil check <file.vgl> [--fmt]
    vigil metrics <transcript.jsonl>
    vigil serve [--port 8717] [--pace 1.0]

Exit codes: 0 success, 2 usage or input error, 3 engine/oracle divergence.
Set VIGIL_LOG=info|debug for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from .channel import ChannelConfig, compute_metrics, transcript_record_from_dict, transcript_to_jsonl
from .controller import ConfigError, ControllerConfig
from .engine import compare_traces, export_trace_to_path, oracle_run, run
from .scenario import format_scenario, lint_scenario

log = logging.getLogger("vigil.cli")

_INT_KEYS = {"alcohol_threshold", "initial_speed", "seed", "max_retries"}
_CONTROLLER_KEYS = ("alcohol_threshold", "t_alcohol_recheck", "t_eye_recheck",
                    "stop_duration", "eye_sample_period", "alcohol_sample_period",
                    "initial_speed")
_CHANNEL_KEYS = ("data_rate", "propagation_delay", "bit_error_rate", "seed",
                 "max_retries")


def _parse_overrides(pairs: list[str], seed: int | None) -> tuple[ControllerConfig, ChannelConfig]:
    controller_kw: dict = {}
    channel_kw: dict = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        if key.startswith("controller."):
            key, targets = key[len("controller."):], ("controller",)
        elif key.startswith("channel."):
            key, targets = key[len("channel."):], ("channel",)
        else:
            targets = ("controller", "channel")
        try:
            value = int(raw) if key in _INT_KEYS else float(raw)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
        if "controller" in targets and key in _CONTROLLER_KEYS:
            controller_kw[key] = value
        elif "channel" in targets and key in _CHANNEL_KEYS:
            channel_kw[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if seed is not None and "seed" not in channel_kw:
        channel_kw["seed"] = seed
    return ControllerConfig(**controller_kw), ChannelConfig(**channel_kw)


def _read_script(path: str):
    try:
        source = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        print(f"{path}: file not found", file=sys.stderr)
        return None, 2
    except OSError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return None, 2
    script, diagnostics = lint_scenario(source)
    for d in diagnostics:
        print(d.render(path), file=sys.stderr)
    if script is None:
        return None, 2
    return script, 0


def _cmd_run(args: argparse.Namespace) -> int:
    script, rc = _read_script(args.scenario)
    if script is None:
        return rc
    try:
        controller_cfg, channel_cfg = _parse_overrides(args.set, args.seed)
    except (ConfigError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2

    trace = run(script, controller_cfg, channel_cfg)
    if args.oracle:
        reference = oracle_run(script, controller_cfg, channel_cfg)
        diffs = compare_traces(trace, reference, tolerance_ms=1)
        if diffs:
            print("engine and fixed-step reference diverged:", file=sys.stderr)
            for d in diffs:
                print(f"  {d}", file=sys.stderr)
            return 3
        log.info("oracle agreement on %s", args.scenario)

    if args.trace:
        export_trace_to_path(trace, "jsonl", args.trace)
    if args.csv:
        export_trace_to_path(trace, "csv", args.csv)
    if args.transcript:
        Path(args.transcript).write_text(transcript_to_jsonl(trace.transcript),
                                         encoding="utf-8")
    last = trace.records[-1]
    sent = sum(1 for r in trace.records if r.kind == "alert_sent")
    print(f"{script.name}: phase={last.phase} t_end={last.t_ms}ms "
          f"records={len(trace.records)} alerts={sent}")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    try:
        source = Path(args.scenario).read_text(encoding="utf-8")
    except FileNotFoundError:
        print(f"{args.scenario}: file not found", file=sys.stderr)
        return 2
    script, diagnostics = lint_scenario(source)
    for d in diagnostics:
        print(d.render(args.scenario), file=sys.stderr)
    if script is None:
        return 2
    if args.fmt:
        sys.stdout.write(format_scenario(script))
    return 0


def _pct(sorted_values, q: float):
    k = max(0, math.ceil(q * len(sorted_values)) - 1)
    return sorted_values[k]


def _cmd_metrics(args: argparse.Namespace) -> int:
    try:
        lines = Path(args.transcript).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        print(f"{args.transcript}: file not found", file=sys.stderr)
        return 2
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(transcript_record_from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            print(f"{args.transcript}:{lineno}: malformed transcript record: {exc}",
                  file=sys.stderr)
            return 2
    try:
        m = compute_metrics(records)
    except ValueError as exc:
        print(f"{args.transcript}: {exc}", file=sys.stderr)
        return 2

    rate = "undefined" if m.measured_data_rate is None else f"{m.measured_data_rate:g}"
    print(f"messages_delivered: {m.messages_delivered}")
    print(f"bytes_delivered: {m.bytes_delivered}")
    print(f"elapsed_s: {m.elapsed:g}")
    print(f"measured_data_rate_Bps: {rate}")
    if m.delays:
        d = sorted(m.delays)
        print(f"delay_ms_p50: {_pct(d, 0.50):g}")
        print(f"delay_ms_p95: {_pct(d, 0.95):g}")
        print(f"delay_ms_max: {d[-1]:g}")
    else:
        print("delay_ms_p50: -")
        print("delay_ms_p95: -")
        print("delay_ms_max: -")
    print(f"errors_total: {m.errors_total}")
    print(f"errors_corrected: {m.errors_corrected}")
    suffix = " (no errors observed)" if m.ec_vacuous else ""
    print(f"ec_ratio: {m.ec_ratio:g}{suffix}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    try:
        controller_cfg, channel_cfg = _parse_overrides(args.set, args.seed)
    except (ConfigError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    if args.pace <= 0:
        print(f"--pace must be positive: {args.pace}", file=sys.stderr)
        return 2
    from .serve import serve_forever
    return serve_forever(host=args.host, port=args.port, pace=args.pace,
                         controller_cfg=controller_cfg, channel_cfg=channel_cfg)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vigil",
        description="Driver-safety controller simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario")
    p_run.add_argument("scenario", help="scenario file (.vgl)")
    p_run.add_argument("--trace", help="write the trace as JSONL")
    p_run.add_argument("--csv", help="write the trace as CSV")
    p_run.add_argument("--transcript", help="write the channel transcript as JSONL")
    p_run.add_argument("--seed", type=int, help="channel RNG seed")
    p_run.add_argument("--oracle", action="store_true",
                       help="cross-check against the fixed-step reference")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a controller or channel parameter")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="validate a scenario file")
    p_check.add_argument("scenario")
    p_check.add_argument("--fmt", action="store_true",
                         help="print the canonical form")
    p_check.set_defaults(func=_cmd_check)

    p_metrics = sub.add_parser("metrics", help="summarize a channel transcript")
    p_metrics.add_argument("transcript")
    p_metrics.set_defaults(func=_cmd_metrics)

    p_serve = sub.add_parser("serve", help="interactive live mode over WebSocket")
    p_serve.add_argument("--port", type=int, default=8717)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--pace", type=float, default=1.0,
                         help="virtual seconds per wall second")
    p_serve.add_argument("--seed", type=int, help="channel RNG seed")
    p_serve.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("VIGIL_LOG", "off").lower()
    if level == "info":
        logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    elif level == "debug":
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
