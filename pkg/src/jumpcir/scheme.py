"""Euler-Maruyama stepping with delay lookback and exact jump times.

One step of a factor with drift forcing ``f_n`` (``delta(t_n)`` for the
first factor, ``X_n`` for the second) reads

    X_{n+1} = P[ X_n + (2 beta X_n + f_n - c(X_n)) h
                 + sigma |X_{n-d}|^gamma sqrt|X_n| dW_n + J_n ]

where ``d = tau / h``, ``c(x) = int g(x, u) lambda(du)`` is the compensator,
``J_n`` collects the jumps in ``(t_n, t_{n+1}]`` applied in time order to the
running pre-jump state, and ``P`` is the sign policy.  The running integral
uses the left endpoint rule ``I_{n+1} = I_n + X_n h``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba as nb
import numpy as np

from .drivers import BROWNIAN, JUMP_MARKS, JUMP_TIMES, RandomStream, gaussian_increment, gaussian_increments, jump_arrays_in, jump_events_in
from .errors import ConfigError, DelayBufferUnderflow, OffGridQuery
from .measures import JumpMeasure, NoJumps
from .model import LinearJump, OneFactorModel, TabulatedJump, TwoFactorModel

__all__ = [
    "SignPolicy",
    "GridSpec",
    "FactorPath",
    "SimulatedPath",
    "FactorState",
    "TwoFactorState",
    "initial_state",
    "initial_two_factor_state",
    "step_one_factor",
    "step_two_factor",
    "simulate_path",
    "integral_of_path",
    "write_path_csv",
]

_LINEAR = 0
_TABULATED = 1


class SignPolicy(str, enum.Enum):
    """How the scheme treats negative excursions.

    ``ABSOLUTE`` keeps the raw Euler value and evaluates the diffusion with
    ``sqrt|X|`` and ``|X(t - tau)|^gamma``; ``TRUNCATION`` projects onto
    ``[0, inf)`` after every step.
    """

    ABSOLUTE = "absolute"
    TRUNCATION = "truncation"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``0, h, ..., T``."""

    h: float
    T: float

    def __post_init__(self):
        h, T = float(self.h), float(self.T)
        if not (math.isfinite(h) and h > 0):
            raise ConfigError(f"grid step h must be > 0, got {self.h}")
        if not (math.isfinite(T) and T > 0):
            raise ConfigError(f"grid horizon T must be > 0, got {self.T}")
        ratio = T / h
        n = round(ratio)
        if n < 1 or abs(ratio - n) > 1e-9 * n:
            raise ConfigError(f"T={T} is not an integer multiple of h={h}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "T", T)

    @property
    def n_steps(self) -> int:
        return round(self.T / self.h)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.h

    def index_of(self, t: float) -> int:
        """Grid index of ``t``; raises :class:`OffGridQuery` off the grid."""
        ratio = float(t) / self.h
        n = round(ratio)
        if abs(ratio - n) > 1e-9 * max(1, n) or not 0 <= n <= self.n_steps:
            raise OffGridQuery(f"t={t} is not a grid point of h={self.h}, T={self.T}")
        return n

    def delay_steps(self, tau: float) -> int:
        if tau == 0:
            return 0
        ratio = tau / self.h
        d = round(ratio)
        if d < 1 or abs(ratio - d) > 1e-9 * d:
            raise ConfigError(f"delay tau={tau} is not an integer multiple of h={self.h}")
        return d


# ---------------------------------------------------------------------------
# compiled kernels


@nb.njit(cache=True, nogil=True)
def _g(x, atom, kind, theta, marks, gx, gtab):
    if kind == _LINEAR:
        return theta * x * marks[atom]
    n = gx.shape[0]
    k = np.searchsorted(gx, x)
    if k < 1:
        k = 1
    elif k > n - 1:
        k = n - 1
    w = (x - gx[k - 1]) / (gx[k] - gx[k - 1])
    return gtab[k - 1, atom] + w * (gtab[k, atom] - gtab[k - 1, atom])


@nb.njit(cache=True, nogil=True)
def _compensator(x, kind, theta, marks, weights, gx, gtab):
    s = 0.0
    if kind == _LINEAR:
        for i in range(weights.shape[0]):
            s += weights[i] * marks[i]
        return theta * x * s
    for i in range(weights.shape[0]):
        s += weights[i] * _g(x, i, kind, theta, marks, gx, gtab)
    return s


@nb.njit(cache=True, nogil=True)
def _advance(x, x_lag, forcing, h, beta, sigma, gamma, dw, comp, jump, truncate):
    diffusion = sigma * abs(x_lag) ** gamma * math.sqrt(abs(x))
    xn = x + (2.0 * beta * x + forcing - comp) * h + diffusion * dw + jump
    if truncate and xn < 0.0:
        xn = 0.0
    return xn


@nb.njit(cache=True, nogil=True)
def _run_factor(
    x0, hist, d, h, forcing, beta, sigma, gamma, dw,
    jstep, jatom, kind, theta, marks, weights, gx, gtab, truncate,
    values, integral, incs,
):  # fmt: skip
    values[0] = x0
    integral[0] = 0.0
    k = 0
    nj = jstep.shape[0]
    for n in range(dw.shape[0]):
        x = values[n]
        if d == 0:
            x_lag = x
        elif n < d:
            x_lag = hist[n]
        else:
            x_lag = values[n - d]
        comp = _compensator(x, kind, theta, marks, weights, gx, gtab)
        jump = 0.0
        pre = x
        while k < nj and jstep[k] == n:
            inc = _g(pre, jatom[k], kind, theta, marks, gx, gtab)
            incs[k] = inc
            pre += inc
            jump += inc
            k += 1
        values[n + 1] = _advance(x, x_lag, forcing[n], h, beta, sigma, gamma, dw[n], comp, jump, truncate)
        integral[n + 1] = integral[n] + x * h


@dataclass(frozen=True)
class _JumpArgs:
    kind: int
    theta: float
    marks: np.ndarray
    weights: np.ndarray
    gx: np.ndarray
    gtab: np.ndarray

    def tuple(self):
        return self.kind, self.theta, self.marks, self.weights, self.gx, self.gtab


def _jump_args(jump, measure: JumpMeasure) -> _JumpArgs:
    dummy_x = np.zeros(2)
    dummy_tab = np.zeros((2, 1))
    if isinstance(measure, NoJumps):
        return _JumpArgs(_LINEAR, 0.0, np.zeros(0), np.zeros(0), dummy_x, dummy_tab)
    if isinstance(jump, LinearJump):
        return _JumpArgs(_LINEAR, float(jump.theta), measure.marks, measure.weights, dummy_x, dummy_tab)
    if isinstance(jump, TabulatedJump):
        cols = jump.columns_for(measure)
        tab = np.ascontiguousarray(jump.table[:, cols])
        return _JumpArgs(_TABULATED, 0.0, measure.marks, measure.weights, np.asarray(jump.x), tab)
    raise TypeError(f"unsupported jump coefficient {jump!r}")


def _lag_buffer(history, tau: float, d: int, h: float, stream_id=None) -> np.ndarray:
    """Values ``xi(-tau + k h)`` for ``k = 0..d-1``."""
    if d == 0:
        return np.zeros(0)
    if not history.covers(tau):
        raise DelayBufferUnderflow(
            f"history starts at {history.start} but the delay needs values from {-tau}", stream_id
        )
    return np.asarray(history.value(-tau + np.arange(d) * h), dtype=float)


# ---------------------------------------------------------------------------
# single-step interface


@dataclass(frozen=True)
class FactorState:
    """Current value, grid index and lag buffer (values at ``t_n - tau .. t_n - h``)."""

    n: int
    x: float
    lagged: tuple[float, ...]
    jumps: tuple[tuple[float, float, float], ...] = ()

    def time(self, h: float) -> float:
        return self.n * h


@dataclass(frozen=True)
class TwoFactorState:
    x: FactorState
    y: FactorState


def _initial(history, tau, grid: GridSpec) -> FactorState:
    d = grid.delay_steps(tau)
    lagged = _lag_buffer(history, tau, d, grid.h)
    return FactorState(0, float(history.x0), tuple(float(v) for v in lagged))


def initial_state(model: OneFactorModel, grid: GridSpec) -> FactorState:
    return _initial(model.history, model.tau, grid)


def initial_two_factor_state(model: TwoFactorModel, grid: GridSpec) -> TwoFactorState:
    return TwoFactorState(
        _initial(model.history_x, model.tau, grid),
        _initial(model.history_y, model.tau, grid),
    )


def _step_factor(state, d, h, forcing, beta, sigma, gamma, jump, measure, rng, truncate):
    if len(state.lagged) != d:
        raise DelayBufferUnderflow(f"lag buffer holds {len(state.lagged)} values, delay needs {d}", rng.stream_id)
    x = state.x
    x_lag = state.lagged[0] if d else x
    args = _jump_args(jump, measure)
    t0 = state.n * h
    events = jump_events_in(rng, measure, t0, t0 + h)
    comp = _compensator(x, *args.tuple())
    pre = x
    total = 0.0
    log = []
    for ev in events:
        inc = _g(pre, ev.index, *args.tuple()[:3], args.gx, args.gtab)
        log.append((ev.time, ev.mark, inc))
        pre += inc
        total += inc
    dw = gaussian_increment(rng.substream(BROWNIAN), h)
    xn = _advance(x, x_lag, forcing, h, beta, sigma, gamma, dw, comp, total, truncate)
    lagged = (state.lagged[1:] + (x,)) if d else ()
    return FactorState(state.n + 1, float(xn), lagged, tuple(log))


def step_one_factor(
    state: FactorState,
    model: OneFactorModel,
    grid: GridSpec,
    rng: RandomStream,
    policy: SignPolicy = SignPolicy.ABSOLUTE,
) -> FactorState:
    """Advance ``X`` by one grid step; ``state.jumps`` logs ``(time, mark, increment)``."""
    d = grid.delay_steps(model.tau)
    f = float(model.delta.value(state.n * grid.h))
    return _step_factor(
        state, d, grid.h, f, model.beta, model.sigma, model.gamma,
        model.jump, model.measure, rng, SignPolicy(policy) is SignPolicy.TRUNCATION,
    )  # fmt: skip


def step_two_factor(
    state: TwoFactorState,
    model: TwoFactorModel,
    grid: GridSpec,
    rng1: RandomStream,
    rng2: RandomStream,
    policy: SignPolicy = SignPolicy.ABSOLUTE,
) -> TwoFactorState:
    """Advance ``(X, Y)`` by one step with independent drivers per factor."""
    d = grid.delay_steps(model.tau)
    truncate = SignPolicy(policy) is SignPolicy.TRUNCATION
    f = float(model.delta.value(state.x.n * grid.h))
    x_next = _step_factor(
        state.x, d, grid.h, f, model.beta1, model.sigma1, model.gamma1,
        LinearJump(model.theta1), model.measure1, rng1, truncate,
    )  # fmt: skip
    y_next = _step_factor(
        state.y, d, grid.h, state.x.x, model.beta2, model.sigma2, model.gamma2,
        LinearJump(model.theta2), model.measure2, rng2, truncate,
    )  # fmt: skip
    return TwoFactorState(x_next, y_next)


# ---------------------------------------------------------------------------
# whole paths


@dataclass
class FactorPath:
    """Grid values, running integral and jump log of one factor."""

    values: np.ndarray
    integral: np.ndarray
    jump_times: np.ndarray
    jump_marks: np.ndarray
    jump_increments: np.ndarray

    @property
    def jump_log(self) -> list[tuple[float, float, float]]:
        return list(zip(self.jump_times.tolist(), self.jump_marks.tolist(), self.jump_increments.tolist()))


@dataclass
class SimulatedPath:
    h: float
    x: FactorPath
    y: FactorPath | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.x.values) - 1

    @property
    def T(self) -> float:
        return self.n_steps * self.h

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.h

    @property
    def values(self) -> np.ndarray:
        return self.x.values

    @property
    def integral(self) -> np.ndarray:
        return self.x.integral

    @property
    def jump_log(self):
        return self.x.jump_log

    def component(self, name: str) -> FactorPath:
        if name == "x":
            return self.x
        if name == "y" and self.y is not None:
            return self.y
        raise KeyError(f"path has no component {name!r}")

    def index_of(self, t: float) -> int:
        ratio = float(t) / self.h
        n = round(ratio)
        if abs(ratio - n) > 1e-9 * max(1, n) or not 0 <= n <= self.n_steps:
            raise OffGridQuery(f"t={t} is not a grid point of this path (h={self.h}, T={self.T})")
        return n


def _simulate_factor(
    x0, lag, d, grid, forcing, beta, sigma, gamma, jump, measure, rng: RandomStream, truncate
) -> FactorPath:
    n = grid.n_steps
    h = grid.h
    dw = gaussian_increments(rng.substream(BROWNIAN), h, n)
    jt, ja = jump_arrays_in(rng.substream(JUMP_TIMES), rng.substream(JUMP_MARKS), measure, 0.0, n * h)
    jstep = np.searchsorted(grid.times, jt, side="left").astype(np.int64) - 1
    args = _jump_args(jump, measure)
    values = np.empty(n + 1)
    integral = np.empty(n + 1)
    incs = np.empty(len(jt))
    _run_factor(
        float(x0), lag, d, h, np.ascontiguousarray(forcing, dtype=float),
        float(beta), float(sigma), float(gamma), dw, jstep, ja, *args.tuple(), bool(truncate),
        values, integral, incs,
    )  # fmt: skip
    marks = args.marks[ja] if len(ja) else np.empty(0)
    return FactorPath(values, integral, jt, marks, incs)


def simulate_path(
    model: OneFactorModel | TwoFactorModel,
    grid: GridSpec,
    policy: SignPolicy = SignPolicy.ABSOLUTE,
    rng: RandomStream | None = None,
    *,
    seed: int = 0,
    stream_id: int = 0,
) -> SimulatedPath:
    """Simulate one path on ``grid``.

    Factor ``k`` of the model draws from ``rng.substream(k)``, which in turn
    splits into Brownian, jump-time and mark substreams.  When ``rng`` is
    omitted a fresh stream is built from ``seed`` and ``stream_id``.
    """
    if rng is None:
        rng = RandomStream(seed, stream_id)
    policy = SignPolicy(policy)
    truncate = policy is SignPolicy.TRUNCATION
    d = grid.delay_steps(model.tau)
    times = grid.times[:-1]
    meta = {"seed": rng.seed, "stream_id": rng.stream_id, "policy": policy.value}
    if isinstance(model, OneFactorModel):
        lag = _lag_buffer(model.history, model.tau, d, grid.h, rng.stream_id)
        x = _simulate_factor(
            model.history.x0, lag, d, grid, model.delta.value(times),
            model.beta, model.sigma, model.gamma, model.jump, model.measure,
            rng.substream(0), truncate,
        )  # fmt: skip
        return SimulatedPath(grid.h, x, None, meta)
    lag_x = _lag_buffer(model.history_x, model.tau, d, grid.h, rng.stream_id)
    lag_y = _lag_buffer(model.history_y, model.tau, d, grid.h, rng.stream_id)
    x = _simulate_factor(
        model.history_x.x0, lag_x, d, grid, model.delta.value(times),
        model.beta1, model.sigma1, model.gamma1, LinearJump(model.theta1), model.measure1,
        rng.substream(0), truncate,
    )  # fmt: skip
    # X does not depend on Y, so Y can be run afterwards with X_n as its forcing
    y = _simulate_factor(
        model.history_y.x0, lag_y, d, grid, x.values[:-1],
        model.beta2, model.sigma2, model.gamma2, LinearJump(model.theta2), model.measure2,
        rng.substream(1), truncate,
    )  # fmt: skip
    return SimulatedPath(grid.h, x, y, meta)


def integral_of_path(p: SimulatedPath, t: float, component: str = "x") -> float:
    """Left-endpoint integral ``int_0^t X ds`` at grid time ``t``."""
    return float(p.component(component).integral[p.index_of(t)])


def write_path_csv(p: SimulatedPath, directory: str | Path, stem: str) -> list[Path]:
    """Dump ``<stem>.csv`` (time,x[,y],integral[,integral_y]) and jump-log sidecars."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cols = [p.times, p.x.values]
    header = ["time", "x"]
    if p.y is not None:
        cols.append(p.y.values)
        header.append("y")
    cols.append(p.x.integral)
    header.append("integral")
    if p.y is not None:
        cols.append(p.y.integral)
        header.append("integral_y")
    out = [directory / f"{stem}.csv"]
    np.savetxt(out[0], np.column_stack(cols), delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    for name, comp in (("x", p.x), ("y", p.y)):
        if comp is None:
            continue
        suffix = "_jumps" if name == "x" else "_jumps_y"
        target = directory / f"{stem}{suffix}.csv"
        data = np.column_stack([comp.jump_times, comp.jump_marks, comp.jump_increments]).reshape(-1, 3)
        np.savetxt(target, data, delimiter=",", header="time,mark,increment", comments="", fmt="%.17g")
        out.append(target)
    return out
