"""Command-line front end.

Exit codes: 0 success or pass, 1 semantic failure (assumption check or
convergence verdict), 2 usage, parse or I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, IoError, JumpCIRError, UnknownNu, ValidationError
from .harness import config_from_dict, default_workers, load_config, run_experiment, sweep, validate_model
from .model import (
    TwoFactorModel,
    analytic_limit_one_factor,
    analytic_limit_two_factor,
    model_from_dict,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _read_json(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _load_model(path: Path):
    """Accept either a bare model file or a full experiment config."""
    data = _read_json(path)
    if isinstance(data, dict) and ("one_factor" in data or "two_factor" in data):
        return model_from_dict(data)
    return config_from_dict(data, base_dir=path.parent).model


def _load_cfg(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "dump_paths", False):
        cfg = dataclasses.replace(cfg, dump_paths=True)
    return cfg


def _g(v) -> str:
    return "-" if v is None else f"{v:.6g}"


def cmd_validate(args) -> int:
    model = _load_model(args.config)
    report = validate_model(model)
    for check in report.checks:
        print(check.line())
    print("overall:", "PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_limits(args) -> int:
    model = _load_model(args.config)
    d = model.delta
    if d.nu is None:
        print("ν unknown for table-driven δ", file=sys.stderr)
        return EXIT_FAIL
    print(f"nu = {d.nu!r}")
    print(f"mu = {d.mu!r}")
    if isinstance(model, TwoFactorModel):
        print(f"limit_X = {analytic_limit_one_factor(model.x_model())!r}")
        print(f"limit_Y = {analytic_limit_two_factor(model)!r}")
    else:
        print(f"limit_X = {analytic_limit_one_factor(model)!r}")
    return EXIT_OK


def _print_table(report) -> None:
    print(f"{'component':<9} {'t':>12} {'mean R(t)':>12} {'std err':>12} {'limit':>12} {'abs err':>12} {'rel err':>12}")
    for rep in (report, report.companion):
        if rep is None:
            continue
        for r in rep.checkpoints:
            print(
                f"{rep.component:<9} {_g(r.t):>12} {_g(r.mean):>12} {_g(r.std_error):>12} "
                f"{_g(r.limit):>12} {_g(r.abs_error):>12} {_g(r.rel_error):>12}"
            )


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    report, moments, manifest = run_experiment(cfg, workers=args.workers, output_dir=args.out)
    print(f"simulated {cfg.paths} paths, h={cfg.grid.h}, T={cfg.grid.T}, seed={cfg.seed}")
    print(f"final R(T) mean = {_g(report.final.mean)} ± {_g(report.final.std_error)}, limit = {_g(report.limit)}")
    if manifest.output_dir:
        print(f"artifacts: {manifest.output_dir}")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _load_cfg(args)
    report, _, manifest = run_experiment(cfg, workers=args.workers, output_dir=args.out)
    _print_table(report)
    print(f"final relative error = {_g(report.final.rel_error)} (tolerance {_g(cfg.tolerance)})")
    print(f"max per-path oscillation over [T/10, T] = {_g(report.max_path_oscillation)}")
    print("verdict:", "PASS" if report.converged else "FAIL")
    return EXIT_OK if report.converged else EXIT_FAIL


def cmd_sweep(args) -> int:
    directory = args.directory
    if not directory.is_dir():
        raise IoError(f"{directory} is not a directory")
    files = sorted(directory.glob("*.json"))
    cfgs = []
    failed_parse = []
    for f in files:
        try:
            cfg = load_config(f)
        except JumpCIRError as exc:
            failed_parse.append((f, exc))
            continue
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        cfgs.append(dataclasses.replace(cfg, output_dir=None, name=f.stem))
    root = args.out if args.out is not None else directory / "sweep_out"
    manifests = sweep(cfgs, root=root, workers=args.workers)
    for f, exc in failed_parse:
        print(f"{f.name:<24} parse-error  {exc}")
    for m in manifests:
        status = m.status if m.status != "ok" else ("PASS" if m.verdicts.get("converged") else "FAIL")
        print(f"{m.name:<24} {status:<11} {m.error or _g(m.metrics.get('rel_error'))}")
    print(f"summary: {root / 'summary.csv'}")
    ok = not failed_parse and all(m.status == "ok" and m.verdicts.get("converged") for m in manifests)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumpcir", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--workers", type=int, default=None, help="worker threads (default: $JUMPCIR_WORKERS or 1)")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")

    p = sub.add_parser("validate", help="check model assumptions")
    p.add_argument("config", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("limits", help="print analytic long-run limits")
    p.add_argument("config", type=Path)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("simulate", help="simulate paths and write artifacts")
    p.add_argument("config", type=Path)
    p.add_argument("--dump-paths", action="store_true", help="write per-path CSV files")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("converge", help="run an experiment and test convergence")
    p.add_argument("config", type=Path)
    common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("sweep", help="run every *.json config in a directory")
    p.add_argument("directory", type=Path)
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if getattr(args, "workers", None) is None and hasattr(args, "workers"):
            args.workers = default_workers()
        return args.func(args)
    except ValidationError as exc:
        for check in exc.report.failures if exc.report is not None else ():
            print(check.line(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except UnknownNu as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except JumpCIRError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
