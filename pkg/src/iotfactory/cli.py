"""Command-line interface: simulate, compare, validate, serve.

Exit codes: 0 success, 2 configuration/validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .kpi import compute_kpis, export_report, report_dict
from .scenario import TraceError, run_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iotfactory",
        description="Deterministic IoT smart-factory simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and export its trace")
    sim.add_argument("--config", required=True)
    sim.add_argument("--mode", required=True, choices=["baseline", "optimized"])
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", required=True, help="trace output path (JSON-Lines)")
    sim.add_argument("--commands", default=None,
                     help="JSON file of recorded commands to replay")

    cmp_ = sub.add_parser("compare", help="paired baseline/optimized run and KPI report")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--report", required=True)
    cmp_.add_argument("--format", choices=["json", "csv"], default="json")
    cmp_.add_argument("--trace-dir", default=None,
                      help="also export both trace files into this directory")

    val = sub.add_parser("validate", help="check a scenario config")
    val.add_argument("--config", required=True)

    srv = sub.add_parser("serve", help="serve the live control API")
    srv.add_argument("--config", required=True)
    srv.add_argument("--port", type=int, required=True)
    srv.add_argument("--seed", type=int, default=None)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--speed", type=float, default=None,
                     help="initial ticks per wall second (default: real time)")
    srv.add_argument("--session-out", default=None,
                     help="write the recorded command session to this path on exit")
    return parser


def _load_commands(path: str) -> list[dict]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError("commands file must hold a JSON list")
    return data


def cmd_simulate(args) -> int:
    commands = _load_commands(args.commands) if args.commands else None
    result = run_scenario(args.config, mode=args.mode, seed=args.seed,
                          trace_path=args.out, commands=commands)
    totals = result.totals
    print(f"wrote {args.out}: ticks={result.header['ticks']} "
          f"energy_wh={totals['e'] / 3.6e9:.3f} downtime={totals['dt']} "
          f"waste={totals['w']} produced={totals['u']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    trace_dir = Path(args.trace_dir) if args.trace_dir else None
    base_path = trace_dir / "baseline.jsonl" if trace_dir else None
    opt_path = trace_dir / "optimized.jsonl" if trace_dir else None
    baseline = run_scenario(cfg, mode="baseline", trace_path=base_path)
    optimized = run_scenario(cfg, mode="optimized", trace_path=opt_path)
    report = compute_kpis(baseline, optimized)
    export_report(report, args.report, args.format)
    d = report_dict(report)
    red = d["reductions_pct"]
    print(f"wrote {args.report}: energy_reduction={red['energy']}% "
          f"downtime_reduction={red['downtime']}% waste_reduction={red['waste']}%")
    return EXIT_OK


def cmd_validate(args) -> int:
    load_config(args.config)
    print(f"{args.config}: OK")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .api import serve  # deferred: pulls in fastapi/uvicorn
    serve(args.config, port=args.port, seed=args.seed, host=args.host,
          speed=args.speed, session_out=args.session_out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"simulate": cmd_simulate, "compare": cmd_compare,
                "validate": cmd_validate, "serve": cmd_serve}
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        for path, msg in e.errors:
            print(f"config error: {path}: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except (TraceError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
