"""Command line front end.

Exit codes: 0 on success, 1 when the requested work fails (parse errors,
failed checks, scenario faults), 2 for command line usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .alternation import AlternationParams, build_alternation_chart, build_baseline_chart
from .dsl import format_diagnostics, parse_chart, print_chart
from .errors import GrafcetError
from .harness import _atomic_write, load_scenario, metrics_json, run_scenario, write_artifacts


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def cmd_validate(args) -> int:
    try:
        text = _read_text(args.file)
    except OSError as err:
        return _fail(str(err))
    result = parse_chart(text)
    if result.diagnostics:
        print(format_diagnostics(result.diagnostics, args.file), file=sys.stderr)
    if not result.ok:
        return 1
    chart = result.chart
    print(f"ok: {args.file} ({len(chart.steps)} steps, {len(chart.transitions)} transitions)")
    return 0


def cmd_fmt(args) -> int:
    try:
        text = _read_text(args.file)
    except OSError as err:
        return _fail(str(err))
    result = parse_chart(text)
    if not result.ok:
        print(format_diagnostics(result.errors, args.file), file=sys.stderr)
        return 1
    canonical = print_chart(result.chart)
    if args.check:
        if canonical != text:
            print(f"would reformat {args.file}")
            return 1
        return 0
    if args.write:
        if canonical != text:
            _atomic_write(Path(args.file), canonical)
        return 0
    sys.stdout.write(canonical)
    return 0


def cmd_run(args) -> int:
    try:
        cfg = load_scenario(args.scenario)
        result = run_scenario(cfg)
    except GrafcetError as err:
        return _fail(str(err))
    if args.out:
        written = write_artifacts(result, args.out, trace=args.trace)
        for path in written:
            print(f"wrote {path}")
    sys.stdout.write(metrics_json(result))
    return 0


def cmd_gen_chart(args) -> int:
    if args.baseline:
        chart = build_baseline_chart()
    else:
        try:
            params = AlternationParams(t_alt=args.t_alt, start_delay=args.start_delay)
        except ValueError as err:
            return _fail(str(err))
        chart = build_alternation_chart(params)
    text = print_chart(chart)
    if args.out:
        _atomic_write(Path(args.out), text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args) -> int:
    from .service import ControlService, ServiceSettings

    try:
        cfg = load_scenario(args.scenario) if args.scenario else None
        settings = ServiceSettings(
            host=args.host, port=args.port, speed=args.speed, scenario=cfg
        )
        service = ControlService(settings)
    except (GrafcetError, ValueError) as err:
        return _fail(str(err))
    try:
        # flush so wrappers reading a pipe see readiness before the first client
        service.serve_forever(
            ready=lambda host, port: print(f"listening on {host}:{port}", flush=True)
        )
    except KeyboardInterrupt:
        print("stopped")
    except OSError as err:
        return _fail(str(err))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grafcet",
        description="GRAFCET chart tools: validate and format chart files, "
        "run closed loop pump scenarios, serve a live control session.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a .gft chart and report diagnostics")
    p.add_argument("file", help="chart file")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("fmt", help="canonically format a .gft chart")
    p.add_argument("file", help="chart file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--check", action="store_true", help="exit 1 if not canonical")
    mode.add_argument("--write", action="store_true", help="rewrite the file in place")
    p.set_defaults(fn=cmd_fmt)

    p = sub.add_parser("run", help="run a scenario file and print metrics")
    p.add_argument("scenario", help="scenario .ini file")
    p.add_argument("--out", help="directory for trace.csv and metrics.json")
    p.add_argument("--trace", dest="trace", action="store_true", default=True,
                   help="write the trace CSV (default)")
    p.add_argument("--no-trace", dest="trace", action="store_false",
                   help="skip the trace CSV, write metrics only")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("gen-chart", help="print the built-in charts as .gft text")
    p.add_argument("--baseline", action="store_true",
                   help="emit the hysteresis baseline instead of the alternation chart")
    p.add_argument("--t-alt", type=float, default=60.0, help="stint timer, seconds")
    p.add_argument("--start-delay", type=float, default=2.0, help="S1 dwell, seconds")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(fn=cmd_gen_chart)

    p = sub.add_parser("serve", help="serve a live control session over TCP/WebSocket")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7410)
    p.add_argument("--scenario", help="scenario .ini giving plant/chart/demand defaults")
    p.add_argument("--speed", type=float, default=1.0, help="real-time pacing multiplier")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
