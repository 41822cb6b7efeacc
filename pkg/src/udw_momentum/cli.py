"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 infeasible physics,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .distribution import make_context, tabulate
from .errors import InfeasibleError, QuadratureError, ResolutionError
from .kinematics import solve_classical_2d, validate_params
from .oracle import oracle_compare
from .stats import LN_TWO_PI, sweep

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("udw_momentum")


class NormalizationCheckError(ArithmeticError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("UDW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"UDW_THREADS must be an integer, got {env!r}") from None
    return 1


def _out_dir(args, cfg: RunConfig) -> Path:
    path = Path(args.out if args.out is not None else cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_feasible(cfg: RunConfig):
    report = validate_params(cfg.process, cfg.detectors)
    if not report.feasible:
        raise InfeasibleError("configuration violates kinematic constraints", report)
    return report


def cmd_validate(cfg: RunConfig, args) -> int:
    report = validate_params(cfg.process, cfg.detectors)
    if args.json:
        sys.stdout.write(_dump_json({"schema_version": SCHEMA_VERSION, "command": "validate", **report.as_dict()}))
    else:
        print(report.format_table())
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def _write_csv(path: Path, header_comments, columns, rows):
    with open(path, "w", newline="\n") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def cmd_distribution(cfg: RunConfig, args) -> int:
    _require_feasible(cfg)
    det = cfg.detectors
    opts = cfg.model.context_options()
    columns, comments, tables = ["psi"], [f"schema_version: {SCHEMA_VERSION}", "command: distribution"], []
    comments.append(f"m={fmt(cfg.process.m)} M={fmt(cfg.process.M)} P={fmt(cfg.process.P)} "
                    f"delta1={fmt(det.delta1)} delta2={fmt(det.delta2)} r={fmt(det.r)}")
    for n, alpha in enumerate(cfg.alphas, start=1):
        ctx = make_context(cfg.process, replace(det, alpha=alpha), **opts)
        tab = tabulate(ctx, cfg.n_psi)
        mass = tab.mass()
        if abs(mass - 1) > 1e-6:
            raise NormalizationCheckError(f"alpha={alpha}: column integrates to {mass!r}")
        name = "density" if n == 1 else f"density_alpha{n}"
        columns.append(name)
        comments.append(f"{name}: alpha={fmt(alpha)} normalization={fmt(ctx.normalization)} "
                        f"({ctx.normalization_method})")
        tables.append(tab)
    grid = tables[0].grid
    rows = zip(grid, *(t.values for t in tables))
    path = _out_dir(args, cfg) / "distribution.csv"
    _write_csv(path, comments, columns, rows)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_stats(cfg: RunConfig, args) -> int:
    _require_feasible(cfg)
    r_values = cfg.sweep.values()
    rows = sweep(cfg.process, cfg.detectors, r_values, cfg.alphas, cfg.epsilon, threads=_threads(args),
                 **cfg.model.context_options())
    uniform_guess = cfg.epsilon / math.pi
    comments = [
        f"schema_version: {SCHEMA_VERSION}",
        "command: stats",
        f"epsilon={fmt(cfg.epsilon)}",
        f"uniform_entropy={fmt(LN_TWO_PI)}",
        f"uniform_best_guess_prob={fmt(uniform_guess)}",
    ]
    out = _out_dir(args, cfg)
    _write_csv(out / "stats.csv", comments, ["r", "alpha", "entropy", "best_guess_prob", "best_guess_center"],
               ((s.r, s.alpha, s.entropy, s.best_guess_prob, s.best_guess_center) for s in rows))

    summary = []
    for alpha in cfg.alphas:
        block = [s for s in rows if s.alpha == alpha]
        h = np.array([s.entropy for s in block])
        i = int(np.argmin(h))
        summary.append({
            "alpha": alpha,
            "r_min_entropy": block[i].r,
            "entropy": block[i].entropy,
            "interior_minimum": bool(0 < i < len(block) - 1 and h[i] < h[0] and h[i] < h[-1]),
            "best_guess_prob": block[i].best_guess_prob,
            "best_guess_gain": block[i].best_guess_prob / uniform_guess,
        })
    (out / "stats_summary.json").write_text(_dump_json({
        "schema_version": SCHEMA_VERSION,
        "command": "stats",
        "uniform_entropy": LN_TWO_PI,
        "uniform_best_guess_prob": uniform_guess,
        "optima": summary,
    }))
    print(f"wrote {out / 'stats.csv'}")
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, args) -> int:
    out = _out_dir(args, cfg)
    if not cfg.oracle_enabled:
        (out / "oracle_compare.json").write_text(_dump_json({"schema_version": SCHEMA_VERSION, "status": "skipped"}))
        print("oracle: skipped")
        return EXIT_OK
    _require_feasible(cfg)
    seed = cfg.seed
    comparisons = []
    for alpha in cfg.alphas:
        det = replace(cfg.detectors, alpha=alpha)
        rep = oracle_compare(cfg.process, det, cfg.oracle, seed)
        log.info("alpha=%.6g analytic %.3fs oracle %.3fs", alpha, rep.analytic_seconds, rep.oracle_seconds)
        scan = []
        for eta in cfg.eta_scan:
            scan.append({"eta": eta, "tv": oracle_compare(cfg.process, det, replace(cfg.oracle, eta=eta), seed).tv})
        ordered = sorted(scan, key=lambda e: -e["eta"])
        monotone = all(b["tv"] <= 1.1 * a["tv"] for a, b in zip(ordered, ordered[1:]))
        comparisons.append({"alpha": alpha, "tv": rep.tv, "sup": rep.sup, "eta_scan": scan,
                            "eta_scan_monotone": monotone})
    (out / "oracle_compare.json").write_text(_dump_json({
        "schema_version": SCHEMA_VERSION,
        "status": "ok",
        "r": cfg.detectors.r,
        "eta": cfg.oracle.eta,
        "comparisons": comparisons,
    }))
    print(f"wrote {out / 'oracle_compare.json'}")
    return EXIT_OK


def cmd_classical2d(cfg: RunConfig, args) -> int:
    spec = cfg.classical2d
    sols = solve_classical_2d(spec.p, spec.m, spec.delta1, spec.delta2)
    if args.json:
        sys.stdout.write(_dump_json({
            "schema_version": SCHEMA_VERSION,
            "command": "classical2d",
            "solutions": [{"labeling": list(s.labeling), "k1": s.k1.tolist(), "k2": s.k2.tolist()} for s in sols],
        }))
    elif not sols:
        print("no real solution")
    else:
        for s in sols:
            print(f"labeling {s.labeling}: k1=({fmt(s.k1[0])}, {fmt(s.k1[1])}) k2=({fmt(s.k2[0])}, {fmt(s.k2[1])})")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "distribution": cmd_distribution,
    "stats": cmd_stats,
    "oracle": cmd_oracle,
    "classical2d": cmd_classical2d,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration file")
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--seed", type=int, help="random seed (overrides [output] seed)")
    common.add_argument("--threads", type=int, help="worker threads for sweeps (default: $UDW_THREADS or 1)")
    parser = argparse.ArgumentParser(prog="udw", description="Momentum reconstruction from a detector pair.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(exc.report.format_table(), file=sys.stderr)
        return EXIT_INFEASIBLE
    except (QuadratureError, ResolutionError, NormalizationCheckError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
