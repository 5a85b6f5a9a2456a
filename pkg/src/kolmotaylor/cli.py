"""Command-line front end: ``kolmotaylor <subcommand> --config FILE``.

Exit codes: 0 when every check passes, 1 on a failed check (failing rows go
to stderr), 2 on configuration or validation errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from .config import CONFIG_DIR_ENV, ExperimentConfig, from_dict, load
from .errors import KolmoError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _load(args) -> ExperimentConfig:
    cfg = load(args.config) if args.config else from_dict({})
    if args.seed is not None:
        cfg.seed = args.seed
    if args.format is not None:
        cfg.output_format = args.format
    if args.out is not None:
        cfg.output_path = args.out
    return cfg


def _emit(cfg: ExperimentConfig, text: str) -> None:
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_group_info(cfg: ExperimentConfig, args) -> int:
    info = ex.group_info(cfg.group)
    if cfg.output_format == "json":
        _emit(cfg, json.dumps(info, indent=2) + "\n")
    else:
        _emit(cfg, ex.group_info_text(info))
    return EXIT_OK


def cmd_converge(cfg: ExperimentConfig, args) -> int:
    report = ex.run_converge(cfg, jobs=args.jobs)
    text = ex.converge_json(report) if cfg.output_format == "json" else ex.converge_csv(report)
    _emit(cfg, text)
    failed = [g for g in report.groups if not g.passed]
    for g in failed:
        print(f"FAIL n={g.n} direction={g.direction} slope={g.fit.slope} threshold={g.threshold}",
              file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_compare_bonfiglioli(cfg: ExperimentConfig, args) -> int:
    rows = ex.run_compare_bonfiglioli(cfg)
    if cfg.output_format == "json":
        _emit(cfg, json.dumps([vars(r) for r in rows], indent=2) + "\n")
    else:
        _emit(cfg, ex.bonfiglioli_csv(rows))
    failed = [r for r in rows if not r.passed]
    for r in failed:
        print(f"FAIL n={r.n} max_abs_diff={r.max_abs_diff!r} threshold={r.threshold!r}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_connect_demo(cfg: ExperimentConfig, args) -> int:
    demo = ex.run_connect_demo(cfg)
    if cfg.output_format == "json":
        _emit(cfg, json.dumps({
            "rows": [[k, i, *map(float, c)] for k, i, *c in demo.rows],
            "endpoint": demo.endpoint.tolist(),
            "target": demo.target.tolist(),
            "error": demo.error,
            "deltas": demo.deltas,
        }, indent=2) + "\n")
    else:
        _emit(cfg, ex.connect_csv(demo, cfg.group.d))
    if not demo.passed:
        print(f"FAIL endpoint error {demo.error!r} >= 1e-10", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_holder_scan(cfg: ExperimentConfig, args) -> int:
    scans = ex.run_holder_scan(cfg)
    alpha = float(cfg.section("holder").get("alpha", 1.0))
    if cfg.output_format == "json":
        _emit(cfg, json.dumps([
            {"vector_field": label, "value": est.value, "saturated": est.saturated,
             "trend_slope": est.trend_slope, "deltas": est.deltas.tolist(), "envelope": est.envelope.tolist()}
            for label, est in scans], indent=2) + "\n")
    else:
        _emit(cfg, ex.holder_csv(cfg.field_name, alpha, scans))
    return EXIT_OK


def cmd_taylor_eval(cfg: ExperimentConfig, args) -> int:
    result = ex.run_taylor_eval(cfg)
    _emit(cfg, json.dumps(result, indent=2) + "\n")
    return EXIT_OK


COMMANDS = {
    "group-info": (cmd_group_info, "print d, r, layers, dilation exponents, powers of B and pivot columns"),
    "converge": (cmd_converge, "remainder-vs-radius convergence study with slope verdicts"),
    "compare-bonfiglioli": (cmd_compare_bonfiglioli, "compact vs permutation-form Taylor polynomial (prototype)"),
    "connect-demo": (cmd_connect_demo, "waypoints of the switching-path connection as CSV"),
    "holder-scan": (cmd_holder_scan, "intrinsic Hoelder difference quotients per delta"),
    "taylor-eval": (cmd_taylor_eval, "evaluate one Taylor polynomial at one point"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kolmotaylor",
        description="Intrinsic Taylor expansions on Kolmogorov groups.",
        epilog=f"Relative config paths are also looked up in ${CONFIG_DIR_ENV}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="TOML experiment file (defaults: prototype, sin_cos_poly)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), help="report format")
        p.add_argument("--jobs", type=int, default=1, help="worker threads (output does not depend on this)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load(args)
        handler = COMMANDS[args.command][0]
        return handler(cfg, args)
    except KolmoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
