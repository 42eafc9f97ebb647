"""Long-term return statistics, moment diagnostics and the mean-ODE oracle.

The long-term return of a path is ``R(t) = t^-mu int_0^t X ds``.  Ensemble
statistics are always reduced over a path-ordered array so the result does
not depend on how paths were distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import EmptyPathSet, UnknownNu
from .model import (
    ConstantDelta,
    DeltaProcess,
    OneFactorModel,
    PowerLawDelta,
    TableDelta,
    TwoFactorModel,
    analytic_limit_one_factor,
    analytic_limit_two_factor,
)
from .scheme import GridSpec, SimulatedPath, integral_of_path

__all__ = [
    "CheckpointRow",
    "ConvergenceReport",
    "MomentRow",
    "MomentDiagnostics",
    "OracleRow",
    "OracleComparison",
    "long_term_return",
    "delta_limit_estimate",
    "default_checkpoints",
    "path_oscillation",
    "return_spread",
    "report_from_returns",
    "convergence_report_one_factor",
    "convergence_report_two_factor",
    "mean_ode_oracle",
    "moments_from_values",
    "moment_diagnostics",
    "oracle_comparison",
]


def _mean_se(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and standard errors (zero for a single sample)."""
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(n)


# ---------------------------------------------------------------------------
# long-term returns


def long_term_return(p: SimulatedPath, t: float, mu: float, component: str = "x") -> float:
    """``t^-mu int_0^t X ds`` at grid time ``t > 0``."""
    if not t > 0:
        raise ValueError(f"long-term return needs t > 0, got {t}")
    return integral_of_path(p, t, component) / float(t) ** mu


def delta_limit_estimate(d: DeltaProcess, t: float, mu: float) -> float:
    """``t^-mu int_0^t delta ds``; exact for every catalog variant."""
    if not t > 0:
        raise ValueError(f"need t > 0, got {t}")
    return float(d.integral(t)) / float(t) ** mu


def default_checkpoints(grid: GridSpec) -> list[float]:
    """``T/16, T/8, T/4, T/2, T`` snapped to the grid."""
    n = grid.n_steps
    idx = sorted({max(1, round(n / 2**k)) for k in (4, 3, 2, 1, 0)})
    # rounding strips representation noise like 0.6000000000000001
    return [round(i * grid.h, 12) for i in idx]


def return_spread(
    integral: np.ndarray, h: float, mu: float, scale: float = 1.0, start_fraction: float = 0.1
) -> float:
    """``(max R - min R) / scale`` over grid times in ``[start_fraction * T, T]``."""
    n = len(integral) - 1
    lo = max(1, math.ceil(start_fraction * n - 1e-9))
    r = integral[lo:] / (np.arange(lo, n + 1) * h) ** mu
    return float((r.max() - r.min()) / scale)


def path_oscillation(
    p: SimulatedPath, mu: float, scale: float = 1.0, start_fraction: float = 0.1, component: str = "x"
) -> float:
    """Final-window spread of one path's long-term return, see :func:`return_spread`."""
    return return_spread(p.component(component).integral, p.h, mu, scale, start_fraction)


@dataclass(frozen=True)
class CheckpointRow:
    t: float
    mean: float
    std_error: float
    limit: float | None
    abs_error: float | None
    rel_error: float | None


@dataclass
class ConvergenceReport:
    """Ensemble long-term return against the analytic limit at each checkpoint.

    ``rel_error`` is ``abs_error / max(1, |limit|)``; the verdict compares the
    final-checkpoint ``rel_error`` with ``tolerance``.
    """

    component: str
    mu: float
    tolerance: float
    n_paths: int
    limit: float | None
    checkpoints: list[CheckpointRow]
    converged: bool
    max_path_oscillation: float | None = None
    companion: "ConvergenceReport | None" = None

    @property
    def final(self) -> CheckpointRow:
        return self.checkpoints[-1]

    def to_dict(self) -> dict:
        d = {
            "component": self.component,
            "mu": self.mu,
            "tolerance": self.tolerance,
            "n_paths": self.n_paths,
            "limit": self.limit,
            "converged": self.converged,
            "max_path_oscillation": self.max_path_oscillation,
            "checkpoints": [vars(r).copy() for r in self.checkpoints],
        }
        if self.companion is not None:
            d["companion"] = self.companion.to_dict()
        return d

    def csv_rows(self) -> list[list]:
        rows = []
        for rep in (self, self.companion):
            if rep is None:
                continue
            for r in rep.checkpoints:
                rows.append([rep.component, r.t, r.mean, r.std_error, r.limit, r.abs_error, r.rel_error])
        return rows

    csv_header = ["component", "t", "mean", "std_error", "limit", "abs_error", "rel_error"]


def report_from_returns(
    returns: np.ndarray,
    checkpoints: Sequence[float],
    limit: float | None,
    tol: float,
    mu: float,
    component: str = "x",
    max_path_oscillation: float | None = None,
) -> ConvergenceReport:
    """Build a report from an ``(n_paths, n_checkpoints)`` array of returns."""
    returns = np.asarray(returns, dtype=float)
    if returns.shape[0] == 0:
        raise EmptyPathSet("no paths to aggregate")
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    mean, se = _mean_se(returns)
    rows = []
    for t, m, s in zip(checkpoints, mean, se):
        if limit is None:
            rows.append(CheckpointRow(float(t), float(m), float(s), None, None, None))
        else:
            err = abs(float(m) - limit)
            rows.append(CheckpointRow(float(t), float(m), float(s), limit, err, err / max(1.0, abs(limit))))
    converged = limit is not None and rows[-1].rel_error <= tol
    return ConvergenceReport(
        component, float(mu), float(tol), returns.shape[0], limit, rows, bool(converged), max_path_oscillation
    )


def _returns(paths, checkpoints, mu, component) -> np.ndarray:
    if not paths:
        raise EmptyPathSet("no paths to aggregate")
    return np.array([[long_term_return(p, t, mu, component) for t in checkpoints] for p in paths])


def _limit_or_none(fn, model):
    try:
        return fn(model)
    except UnknownNu:
        return None


def _max_oscillation(paths, mu, limit, component):
    scale = max(1.0, abs(limit)) if limit is not None else 1.0
    return max(path_oscillation(p, mu, scale, component=component) for p in paths)


def convergence_report_one_factor(
    paths: Sequence[SimulatedPath],
    model: OneFactorModel,
    mu: float,
    checkpoints: Sequence[float],
    tol: float,
) -> ConvergenceReport:
    """Ensemble long-term return of ``X`` against ``-nu / (2 beta)``."""
    limit = _limit_or_none(analytic_limit_one_factor, model)
    return report_from_returns(
        _returns(paths, checkpoints, mu, "x"), checkpoints, limit, tol, mu, "x",
        _max_oscillation(paths, mu, limit, "x"),
    )  # fmt: skip


def convergence_report_two_factor(
    paths: Sequence[SimulatedPath],
    model: TwoFactorModel,
    mu: float,
    checkpoints: Sequence[float],
    tol: float,
) -> ConvergenceReport:
    """Long-term return of ``Y`` against ``nu / (4 beta1 beta2)``; ``X`` rides along as companion."""
    limit_y = _limit_or_none(analytic_limit_two_factor, model)
    limit_x = _limit_or_none(analytic_limit_one_factor, model.x_model())
    report = report_from_returns(
        _returns(paths, checkpoints, mu, "y"), checkpoints, limit_y, tol, mu, "y",
        _max_oscillation(paths, mu, limit_y, "y"),
    )  # fmt: skip
    report.companion = report_from_returns(
        _returns(paths, checkpoints, mu, "x"), checkpoints, limit_x, tol, mu, "x",
        _max_oscillation(paths, mu, limit_x, "x"),
    )  # fmt: skip
    return report


# ---------------------------------------------------------------------------
# mean ODE  m' = 2 beta m + delta(t)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _affine_forcing_step(m0, a, L, p, q):
    """Exact solution at ``L`` of ``m' = -a m + p + q s`` with ``m(0) = m0``."""
    if a == 0.0:
        return m0 + p * L + 0.5 * q * L * L
    e = math.exp(-a * L)
    phi1 = -math.expm1(-a * L) / a  # int_0^L e^{-a(L-s)} ds
    phi2 = (L - phi1) / a  # int_0^L e^{-a(L-s)} s ds
    return e * m0 + p * phi1 + q * phi2


def _power_segment(a, mu, t0, t1):
    """``int_{t0}^{t1} e^{-a (t1 - s)} s^(mu-1) ds``."""
    L = t1 - t0
    if mu == 1.0:
        return -math.expm1(-a * L) / a if a else L
    if t0 == 0.0:
        # substitute r = t1 - s; (t1 - r)^(mu-1) is the algebraic end weight
        val, _ = integrate.quad(lambda r: math.exp(-a * r), 0.0, t1, weight="alg", wvar=(0.0, mu - 1.0), limit=400)
        return val
    if a * L <= 1.0:
        s = t0 + 0.5 * L * (_GL_NODES + 1.0)
        return 0.5 * L * float(np.dot(_GL_WEIGHTS, np.exp(-a * (t1 - s)) * s ** (mu - 1.0)))
    val, _ = integrate.quad(
        lambda s: math.exp(-a * (t1 - s)) * s ** (mu - 1.0), t0, t1, limit=400, epsabs=1e-14, epsrel=1e-13
    )
    return val


def _oracle_step(delta: DeltaProcess, a: float, m0: float, t0: float, t1: float) -> float:
    if t1 == t0:
        return m0
    if isinstance(delta, ConstantDelta):
        return _affine_forcing_step(m0, a, t1 - t0, delta.delta0, 0.0)
    if isinstance(delta, PowerLawDelta):
        return math.exp(-a * (t1 - t0)) * m0 + _power_segment(a, delta.power, t0, t1)
    if isinstance(delta, TableDelta):
        knots = np.asarray(delta.times)
        inner = knots[(knots > t0) & (knots < t1)]
        pts = np.concatenate(([t0], inner, [t1]))
        m = m0
        for s0, s1 in zip(pts[:-1], pts[1:]):
            v0 = float(delta.value(s0))
            v1 = float(delta.value(s1))
            m = _affine_forcing_step(m, a, s1 - s0, v0, (v1 - v0) / (s1 - s0))
        return m
    raise TypeError(f"unsupported delta {delta!r}")


def mean_ode_oracle(model: OneFactorModel, t):
    """Expected value ``E X(t)`` from ``m' = 2 beta m + delta(t)``, ``m(0) = xi(0)``.

    Diffusion and compensated jumps are mean-zero and the drift is linear, so
    the mean solves this scalar ODE.  Constant and tabulated forcing use the
    exact exponential integrator; power-law forcing integrates the
    variation-of-constants kernel by adaptive quadrature.  ``t`` may be a
    scalar or an array of nonnegative times.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("oracle needs t >= 0")
    a = -2.0 * model.beta
    order = np.argsort(t_arr, kind="stable")
    out = np.empty_like(t_arr)
    m = float(model.history.x0)
    prev = 0.0
    for i in order:
        m = _oracle_step(model.delta, a, m, prev, float(t_arr[i]))
        prev = float(t_arr[i])
        out[i] = m
    if np.ndim(t) == 0:
        return float(out[0])
    return out


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class MomentRow:
    t: float
    mean_x: float
    se_x: float
    mean_x2: float
    se_x2: float
    mean_x4: float
    se_x4: float

    @property
    def jensen_gap(self) -> float:
        return self.mean_x2 - self.mean_x**2


@dataclass
class MomentDiagnostics:
    """Empirical ``E X``, ``E X^2`` and ``E X^4`` with standard errors per checkpoint."""

    component: str
    n_paths: int
    rows: list[MomentRow] = field(default_factory=list)

    def jensen_holds(self, n_se: float = 3.0) -> bool:
        # rounding slack scales with E X^2
        return all(
            r.jensen_gap >= -n_se * (r.se_x2 + 2 * abs(r.mean_x) * r.se_x) - 1e-12 * max(1.0, r.mean_x2)
            for r in self.rows
        )

    def to_dict(self) -> dict:
        return {
            "component": self.component,
            "n_paths": self.n_paths,
            "rows": [dict(vars(r), jensen_gap=r.jensen_gap) for r in self.rows],
        }

    csv_header = ["component", "t", "mean_x", "se_x", "mean_x2", "se_x2", "mean_x4", "se_x4", "jensen_gap"]

    def csv_rows(self) -> list[list]:
        return [
            [self.component, r.t, r.mean_x, r.se_x, r.mean_x2, r.se_x2, r.mean_x4, r.se_x4, r.jensen_gap]
            for r in self.rows
        ]


def moments_from_values(values: np.ndarray, checkpoints: Sequence[float], component: str = "x") -> MomentDiagnostics:
    """Moments from an ``(n_paths, n_checkpoints)`` array of state values."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 0:
        raise EmptyPathSet("no paths to aggregate")
    m1, s1 = _mean_se(values)
    m2, s2 = _mean_se(values**2)
    m4, s4 = _mean_se(values**4)
    rows = [
        MomentRow(float(t), *map(float, (m1[i], s1[i], m2[i], s2[i], m4[i], s4[i])))
        for i, t in enumerate(checkpoints)
    ]
    return MomentDiagnostics(component, values.shape[0], rows)


def moment_diagnostics(
    paths: Sequence[SimulatedPath], checkpoints: Sequence[float], component: str = "x"
) -> MomentDiagnostics:
    if not paths:
        raise EmptyPathSet("no paths to aggregate")
    values = np.array([[p.component(component).values[p.index_of(t)] for t in checkpoints] for p in paths])
    return moments_from_values(values, checkpoints, component)


# ---------------------------------------------------------------------------
# ensemble mean against the oracle


@dataclass(frozen=True)
class OracleRow:
    t: float
    mean: float
    std_error: float
    oracle: float
    z: float | None


@dataclass
class OracleComparison:
    """Ensemble mean of ``X`` against :func:`mean_ode_oracle`.

    ``max_grid_error`` is the largest ``|mean X(t_n) - m(t_n)|`` over the
    whole grid when the ensemble mean path is available.
    """

    rows: list[OracleRow]
    max_grid_error: float | None = None

    def max_abs_z(self) -> float:
        zs = [abs(r.z) for r in self.rows if r.z is not None]
        return max(zs) if zs else 0.0

    def to_dict(self) -> dict:
        return {"rows": [vars(r).copy() for r in self.rows], "max_grid_error": self.max_grid_error}


def oracle_comparison(
    model: OneFactorModel,
    values: np.ndarray,
    checkpoints: Sequence[float],
    mean_path: np.ndarray | None = None,
    grid: GridSpec | None = None,
) -> OracleComparison:
    mean, se = _mean_se(np.asarray(values, dtype=float))
    oracle = mean_ode_oracle(model, np.asarray(checkpoints, dtype=float))
    rows = []
    for t, m, s, o in zip(checkpoints, mean, se, oracle):
        z = (m - o) / s if s > 0 else None
        rows.append(OracleRow(float(t), float(m), float(s), float(o), None if z is None else float(z)))
    max_err = None
    if mean_path is not None and grid is not None:
        max_err = float(np.max(np.abs(mean_path - mean_ode_oracle(model, grid.times))))
    return OracleComparison(rows, max_err)
