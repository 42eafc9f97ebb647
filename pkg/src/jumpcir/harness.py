"""Experiment orchestration: configs, parallel path fan-out, artifacts.

Paths are grouped into fixed blocks of ``BLOCK_SIZE`` consecutive stream ids.
Workers take blocks round-robin and every reduction folds blocks in index
order, so all numeric outputs are independent of the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from .drivers import RandomStream
from .errors import ConfigError, DelayBufferUnderflow, IoError, JumpCIRError, UnknownNu, ValidationError
from .estimators import (
    ConvergenceReport,
    MomentDiagnostics,
    OracleComparison,
    default_checkpoints,
    moments_from_values,
    oracle_comparison,
    report_from_returns,
    return_spread,
)
from .model import (
    OneFactorModel,
    TwoFactorModel,
    ValidationReport,
    analytic_limit_one_factor,
    analytic_limit_two_factor,
    model_from_dict,
    model_to_dict,
    validate_one_factor,
    validate_two_factor,
)
from .scheme import GridSpec, SignPolicy, simulate_path, write_path_csv

__all__ = [
    "BLOCK_SIZE",
    "WORKERS_ENV",
    "ExperimentConfig",
    "RunManifest",
    "config_from_dict",
    "load_config",
    "canonical_json",
    "default_workers",
    "validate_model",
    "run_experiment",
    "sweep",
]

log = logging.getLogger(__name__)

BLOCK_SIZE = 16
WORKERS_ENV = "JUMPCIR_WORKERS"


def canonical_json(obj: Any) -> str:
    """Sorted keys, no whitespace, shortest round-trip floats."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=True)


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


@dataclass
class ExperimentConfig:
    model: OneFactorModel | TwoFactorModel
    grid: GridSpec
    paths: int
    seed: int
    mu: float
    checkpoints: list[float]
    tolerance: float
    sign_policy: SignPolicy = SignPolicy.ABSOLUTE
    output_dir: Path | None = None
    allow_invalid: bool = False
    dump_paths: bool = False
    name: str = "experiment"

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigError(f"paths must be >= 1, got {self.paths}")
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be > 0, got {self.tolerance}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.checkpoints:
            raise ConfigError("checkpoints must be nonempty")
        for t in self.checkpoints:
            if t <= 0:
                raise ConfigError(f"checkpoint {t} must be > 0")
            try:
                self.grid.index_of(t)
            except JumpCIRError:
                raise ConfigError(f"checkpoint {t} is not on the grid (h={self.grid.h}, T={self.grid.T})") from None
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ConfigError("checkpoints must be strictly increasing")
        self.grid.delay_steps(self.model.tau)

    def to_dict(self, include_output=False) -> dict:
        d = {
            "name": self.name,
            "model": model_to_dict(self.model),
            "grid": {"h": self.grid.h, "T": self.grid.T},
            "paths": self.paths,
            "seed": self.seed,
            "mu": self.mu,
            "checkpoints": list(self.checkpoints),
            "tolerance": self.tolerance,
            "sign_policy": self.sign_policy.value,
            "allow_invalid": self.allow_invalid,
        }
        if include_output:
            d["output_dir"] = None if self.output_dir is None else str(self.output_dir)
            d["dump_paths"] = self.dump_paths
        return d

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def _field(d: Mapping, key: str, kind, default=...):
    if key not in d:
        if default is ...:
            raise ConfigError(f"config: missing field '{key}'")
        return default
    v = d[key]
    if kind is float and isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if kind is int and isinstance(v, int) and not isinstance(v, bool):
        return v
    if kind is bool and isinstance(v, bool):
        return v
    if kind is str and isinstance(v, str):
        return v
    if kind is dict and isinstance(v, Mapping):
        return v
    kind_name = "object" if kind is dict else kind.__name__
    raise ConfigError(f"config.{key}: expected {kind_name}, got {v!r}")


def config_from_dict(data: Mapping, base_dir: Path | None = None) -> ExperimentConfig:
    """Build a config from its JSON object; relative ``output_dir`` resolves against ``base_dir``."""
    if not isinstance(data, Mapping):
        raise ConfigError("config must be a JSON object")
    model = model_from_dict(_field(data, "model", dict))
    g = _field(data, "grid", dict)
    try:
        grid = GridSpec(_field(g, "h", float), _field(g, "T", float))
    except ConfigError as exc:
        raise ConfigError(f"config.grid: {exc}") from None
    mu_default = model.delta.mu if model.delta.mu is not None else 1.0
    mu = _field(data, "mu", float, mu_default)
    if mu < 1:
        raise ConfigError(f"config.mu: must be >= 1, got {mu}")
    cps = data.get("checkpoints")
    if cps is None:
        checkpoints = default_checkpoints(grid)
    elif isinstance(cps, list) and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in cps):
        checkpoints = [float(c) for c in cps]
    else:
        raise ConfigError("config.checkpoints: expected a list of numbers")
    try:
        policy = SignPolicy(_field(data, "sign_policy", str, SignPolicy.ABSOLUTE.value))
    except ValueError:
        raise ConfigError(f"config.sign_policy: unknown policy {data.get('sign_policy')!r}") from None
    out = data.get("output_dir")
    if out is not None:
        out = Path(out)
        if base_dir is not None and not out.is_absolute():
            out = base_dir / out
    return ExperimentConfig(
        model=model,
        grid=grid,
        paths=_field(data, "paths", int),
        seed=_field(data, "seed", int),
        mu=mu,
        checkpoints=checkpoints,
        tolerance=_field(data, "tolerance", float),
        sign_policy=policy,
        output_dir=out,
        allow_invalid=_field(data, "allow_invalid", bool, False),
        dump_paths=_field(data, "dump_paths", bool, False),
        name=_field(data, "name", str, "experiment"),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data, base_dir=path.parent)


def validate_model(model: OneFactorModel | TwoFactorModel) -> ValidationReport:
    if isinstance(model, TwoFactorModel):
        return validate_two_factor(model)
    return validate_one_factor(model)


@dataclass
class RunManifest:
    name: str
    config_hash: str
    engine_version: str
    status: str = "ok"
    wall_time: float = 0.0
    workers: int = 1
    worker_ranges: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    output_dir: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return dict(vars(self))


# ---------------------------------------------------------------------------
# path fan-out


@dataclass
class _Block:
    start: int
    stop: int
    returns_x: np.ndarray
    values_x: np.ndarray
    osc_x: np.ndarray
    sum_x: np.ndarray
    returns_y: np.ndarray | None = None
    values_y: np.ndarray | None = None
    osc_y: np.ndarray | None = None


def _run_block(cfg: ExperimentConfig, start: int, stop: int, cp_idx, scales, dump_dir) -> _Block:
    k = len(cp_idx)
    n = stop - start
    two = isinstance(cfg.model, TwoFactorModel)
    t_cp = np.asarray(cp_idx) * cfg.grid.h
    block = _Block(
        start, stop, np.empty((n, k)), np.empty((n, k)), np.empty(n), np.zeros(cfg.grid.n_steps + 1)
    )
    if two:
        block.returns_y, block.values_y, block.osc_y = np.empty((n, k)), np.empty((n, k)), np.empty(n)
    for j, sid in enumerate(range(start, stop)):
        try:
            p = simulate_path(cfg.model, cfg.grid, cfg.sign_policy, RandomStream(cfg.seed, sid))
        except DelayBufferUnderflow:
            raise
        except Exception as exc:
            raise JumpCIRError(f"path with stream id {sid} failed: {exc}") from exc
        block.returns_x[j] = p.x.integral[cp_idx] / t_cp**cfg.mu
        block.values_x[j] = p.x.values[cp_idx]
        block.osc_x[j] = return_spread(p.x.integral, cfg.grid.h, cfg.mu, scales["x"])
        block.sum_x += p.x.values
        if two:
            block.returns_y[j] = p.y.integral[cp_idx] / t_cp**cfg.mu
            block.values_y[j] = p.y.values[cp_idx]
            block.osc_y[j] = return_spread(p.y.integral, cfg.grid.h, cfg.mu, scales["y"])
        if dump_dir is not None:
            write_path_csv(p, dump_dir, f"path_{sid:06d}")
    return block


def _limits(model) -> dict:
    out = {}
    try:
        if isinstance(model, TwoFactorModel):
            out["x"] = analytic_limit_one_factor(model.x_model())
            out["y"] = analytic_limit_two_factor(model)
        else:
            out["x"] = analytic_limit_one_factor(model)
    except UnknownNu:
        pass
    return out


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


def run_experiment(
    cfg: ExperimentConfig,
    workers: int | None = None,
    output_dir: str | Path | None = None,
) -> tuple[ConvergenceReport, MomentDiagnostics, RunManifest]:
    """Simulate ``cfg.paths`` paths (stream ids ``0..paths-1``) and aggregate.

    Artifacts go to ``output_dir`` (falling back to ``cfg.output_dir``); when
    neither is set nothing is written.  A failing path aborts the run before
    any artifact is written.
    """
    t_start = time.perf_counter()
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    out = Path(output_dir) if output_dir is not None else cfg.output_dir

    validation = validate_model(cfg.model)
    if not validation.passed and not cfg.allow_invalid:
        msg = "; ".join(c.line() for c in validation.failures)
        raise ValidationError(f"model fails its assumptions: {msg}", validation)

    two = isinstance(cfg.model, TwoFactorModel)
    limits = _limits(cfg.model)
    scales = {c: max(1.0, abs(limits[c])) if c in limits else 1.0 for c in ("x", "y")}
    cp_idx = np.array([cfg.grid.index_of(t) for t in cfg.checkpoints])

    starts = list(range(0, cfg.paths, BLOCK_SIZE))
    ranges = [(s, min(s + BLOCK_SIZE, cfg.paths)) for s in starts]
    assignment = [ranges[w::workers] for w in range(workers)]

    staging = None
    if out is not None and cfg.dump_paths:
        staging = out / ".paths.partial"
        shutil.rmtree(staging, ignore_errors=True)

    def work(blocks):
        return [_run_block(cfg, a, b, cp_idx, scales, staging) for a, b in blocks]

    try:
        if workers == 1:
            done = work(ranges)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                done = [blk for res in pool.map(work, assignment) for blk in res]
    except BaseException:
        if staging is not None:
            shutil.rmtree(staging, ignore_errors=True)
        raise
    done.sort(key=lambda b: b.start)

    def stack(attr):
        return np.concatenate([getattr(b, attr) for b in done])

    mean_path = np.zeros(cfg.grid.n_steps + 1)
    for b in done:
        mean_path += b.sum_x
    mean_path /= cfg.paths

    comp = "y" if two else "x"
    report = report_from_returns(
        stack(f"returns_{comp}"), cfg.checkpoints, limits.get(comp), cfg.tolerance, cfg.mu, comp,
        float(stack(f"osc_{comp}").max()),
    )  # fmt: skip
    moments = moments_from_values(stack("values_x"), cfg.checkpoints, "x")
    moments_y = None
    if two:
        report.companion = report_from_returns(
            stack("returns_x"), cfg.checkpoints, limits.get("x"), cfg.tolerance, cfg.mu, "x",
            float(stack("osc_x").max()),
        )  # fmt: skip
        moments_y = moments_from_values(stack("values_y"), cfg.checkpoints, "y")
    x_model = cfg.model.x_model() if two else cfg.model
    oracle = oracle_comparison(x_model, stack("values_x"), cfg.checkpoints, mean_path, cfg.grid)

    manifest = RunManifest(
        name=cfg.name,
        config_hash=cfg.config_hash,
        engine_version=__version__,
        workers=workers,
        worker_ranges=[{"worker": w, "paths": [list(r) for r in rs]} for w, rs in enumerate(assignment)],
        verdicts={"validation_passed": validation.passed, "converged": report.converged},
        metrics={
            "final_mean": report.final.mean,
            "limit": report.limit,
            "rel_error": report.final.rel_error,
            "max_path_oscillation": report.max_path_oscillation,
            "max_grid_error": oracle.max_grid_error,
            "oracle_max_abs_z": oracle.max_abs_z(),
        },
        output_dir=None if out is None else str(out),
    )
    manifest.wall_time = time.perf_counter() - t_start
    if out is not None:
        _write_artifacts(out, cfg, report, moments, moments_y, oracle, validation, manifest, staging)
    return report, moments, manifest


def _write_artifacts(out, cfg, report, moments, moments_y, oracle, validation, manifest, staging):
    body = {
        "name": cfg.name,
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "paths": cfg.paths,
        "model_kind": "two_factor" if isinstance(cfg.model, TwoFactorModel) else "one_factor",
        "sign_policy": cfg.sign_policy.value,
        "validation": validation.to_dict(),
        "convergence": report.to_dict(),
        "moments": moments.to_dict(),
        "oracle": oracle.to_dict(),
    }
    if moments_y is not None:
        body["moments_y"] = moments_y.to_dict()
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(body, indent=2, sort_keys=True, allow_nan=True) + "\n")
        _write_csv(out / "report.csv", ConvergenceReport.csv_header, report.csv_rows())
        rows = moments.csv_rows() + (moments_y.csv_rows() if moments_y is not None else [])
        _write_csv(out / "moments.csv", MomentDiagnostics.csv_header, rows)
        if staging is not None:
            final = out / "paths"
            shutil.rmtree(final, ignore_errors=True)
            staging.rename(final)
        (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write results to {out}: {exc}") from exc


def sweep(
    cfgs: Sequence[ExperimentConfig],
    root: str | Path | None = None,
    workers: int | None = None,
) -> list[RunManifest]:
    """Run configs one after another, isolating failures.

    Run ``i`` writes to its own ``output_dir`` or, failing that, to
    ``root/<i>_<name>``.  With ``root`` set a ``summary.csv`` indexes all runs.
    """
    root = None if root is None else Path(root)
    manifests = []
    for i, cfg in enumerate(cfgs):
        out = cfg.output_dir
        if out is None and root is not None:
            out = root / f"{i:03d}_{cfg.name}"
        try:
            _, _, man = run_experiment(cfg, workers=workers, output_dir=out)
        except JumpCIRError as exc:
            log.warning("sweep run %d (%s) failed: %s", i, cfg.name, exc)
            man = RunManifest(
                name=cfg.name,
                config_hash=cfg.config_hash,
                engine_version=__version__,
                status="error",
                error=f"{type(exc).__name__}: {exc}",
                output_dir=None if out is None else str(out),
            )
        manifests.append(man)
    if root is not None:
        root.mkdir(parents=True, exist_ok=True)
        header = ["index", "name", "status", "config_hash", "converged", "final_mean", "limit",
                  "rel_error", "max_grid_error", "output_dir", "error"]  # fmt: skip
        rows = [
            [i, m.name, m.status, m.config_hash, m.verdicts.get("converged"), m.metrics.get("final_mean"),
             m.metrics.get("limit"), m.metrics.get("rel_error"), m.metrics.get("max_grid_error"),
             m.output_dir, m.error]  # fmt: skip
            for i, m in enumerate(manifests)
        ]
        _write_csv(root / "summary.csv", header, rows)
    return manifests
