"""Model parameters, assumption validators and analytic long-run limits.

The one-factor short rate follows

    dX = (2 beta X + delta(t)) dt + sigma |X(t - tau)|^gamma sqrt|X| dW
         + int g(X(t-), u) Ntilde(dt, du)

and the two-factor model feeds ``X`` into the drift of a second rate ``Y``
with linear-in-state jumps on both factors.  Long-run averages
``t^-mu int_0^t X ds`` converge to ``-nu / (2 beta)`` and, for the second
factor, ``t^-mu int_0^t Y ds`` to ``nu / (4 beta1 beta2)``, where
``nu = lim t^-mu int_0^t delta ds``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Union

import numpy as np

from .errors import ConfigError, UnknownNu
from .measures import (
    JumpMeasure,
    NoJumps,
    gamma_functional,
    m_functional,
    measure_from_dict,
    measure_to_dict,
    moment,
)

__all__ = [
    "ConstantDelta",
    "PowerLawDelta",
    "TableDelta",
    "DeltaProcess",
    "LinearJump",
    "TabulatedJump",
    "JumpCoefficient",
    "HistorySegment",
    "OneFactorModel",
    "TwoFactorModel",
    "Status",
    "Check",
    "ValidationReport",
    "delta_value",
    "lipschitz_constant",
    "check_a4",
    "validate_one_factor",
    "validate_two_factor",
    "analytic_limit_one_factor",
    "analytic_limit_two_factor",
    "model_from_dict",
    "model_to_dict",
]


# ---------------------------------------------------------------------------
# drift forcing delta(t)


@dataclass(frozen=True)
class ConstantDelta:
    """``delta(t) = delta0``; long-run average ``nu = delta0`` with ``mu = 1``."""

    delta0: float

    def __post_init__(self):
        if not (math.isfinite(self.delta0) and self.delta0 >= 0):
            raise ConfigError(f"constant delta must be finite and >= 0, got {self.delta0}")

    @property
    def mu(self) -> float:
        return 1.0

    @property
    def nu(self) -> float:
        return float(self.delta0)

    @property
    def square_growth(self) -> float:
        # int_0^t delta^2 = delta0^2 t
        return 1.0

    def value(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.delta0)[()]

    def integral(self, t):
        return self.delta0 * np.asarray(t, dtype=float)[()]


@dataclass(frozen=True)
class PowerLawDelta:
    """``delta(t) = t^(mu - 1)`` with ``mu >= 1``; ``nu = 1 / mu``."""

    power: float

    def __post_init__(self):
        if not (math.isfinite(self.power) and self.power >= 1.0):
            raise ConfigError(f"power-law delta needs mu >= 1, got {self.power}")

    @property
    def mu(self) -> float:
        return float(self.power)

    @property
    def nu(self) -> float:
        return 1.0 / self.power

    @property
    def square_growth(self) -> float:
        # int_0^t s^(2mu-2) ds = t^(2mu-1) / (2mu-1)
        return 2.0 * self.power - 1.0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return np.power(t, self.power - 1.0)[()]

    def integral(self, t):
        t = np.asarray(t, dtype=float)
        return (np.power(t, self.power) / self.power)[()]


@dataclass(frozen=True)
class TableDelta:
    """Tabulated nonnegative forcing, linear between knots, constant outside."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(v) for v in self.times)
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if len(t) < 1 or len(t) != len(v):
            raise ConfigError("table delta needs matching, nonempty time and value lists")
        if t[0] != 0.0:
            raise ConfigError("table delta must start at t = 0")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ConfigError("table delta times must be strictly increasing")
        if any(not (math.isfinite(x) and x >= 0) for x in v):
            raise ConfigError("table delta values must be finite and >= 0")

    mu = None
    nu = None
    square_growth = None

    def value(self, t):
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)[()]

    def integral(self, t):
        """Exact integral of the piecewise-linear interpolant over ``[0, t]``."""
        t = np.asarray(t, dtype=float)
        knots = np.asarray(self.times)
        vals = np.asarray(self.values)
        seg = 0.5 * (vals[1:] + vals[:-1]) * np.diff(knots)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        flat = t.reshape(-1)
        out = np.empty_like(flat)
        for i, s in enumerate(flat):
            k = int(np.searchsorted(knots, s, side="right")) - 1
            v_s = np.interp(s, knots, vals)
            out[i] = cum[k] + 0.5 * (vals[k] + v_s) * (s - knots[k])
        return out.reshape(t.shape)[()]


DeltaProcess = Union[ConstantDelta, PowerLawDelta, TableDelta]


def delta_value(d: DeltaProcess, t):
    """Evaluate ``delta(t)`` for ``t >= 0``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("delta is defined for t >= 0")
    return d.value(t)


# ---------------------------------------------------------------------------
# jump coefficient g(x, u)


@dataclass(frozen=True)
class LinearJump:
    """``g(x, u) = theta * x * u``."""

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ConfigError(f"jump theta must be finite, got {self.theta}")

    def __call__(self, x, u):
        return self.theta * np.asarray(x, dtype=float) * u


@dataclass(frozen=True)
class TabulatedJump:
    """``g`` tabulated on an ``x`` grid for a set of marks.

    ``g[i][j]`` is ``g(x[i], u[j])``.  Values are linear in ``x`` between knots
    and extrapolated linearly from the end segments.  Every mark of the
    measure the coefficient is paired with must appear in ``u``.
    """

    x: tuple[float, ...]
    u: tuple[float, ...]
    g: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        u = tuple(float(v) for v in self.u)
        g = tuple(tuple(float(v) for v in row) for row in self.g)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "g", g)
        if len(x) < 2 or any(b <= a for a, b in zip(x, x[1:])):
            raise ConfigError("tabulated jump needs >= 2 strictly increasing x knots")
        if not u or len(set(u)) != len(u):
            raise ConfigError("tabulated jump needs distinct marks u")
        if len(g) != len(x) or any(len(row) != len(u) for row in g):
            raise ConfigError("tabulated jump g must have shape (len(x), len(u))")
        if not np.all(np.isfinite(self.table)):
            raise ConfigError("tabulated jump values must be finite")
        at_zero = self.column_values(0.0)
        if np.max(np.abs(at_zero)) > 1e-12:
            raise ConfigError("tabulated jump must satisfy g(0, u) = 0")

    @property
    def table(self) -> np.ndarray:
        return np.asarray(self.g, dtype=float).reshape(len(self.x), len(self.u))

    def slopes(self) -> np.ndarray:
        """Segment slopes, shape ``(len(x) - 1, len(u))``."""
        return np.diff(self.table, axis=0) / np.diff(np.asarray(self.x))[:, None]

    def column_values(self, x: float) -> np.ndarray:
        xs = np.asarray(self.x)
        k = int(np.clip(np.searchsorted(xs, x), 1, len(xs) - 1))
        tab = self.table
        w = (x - xs[k - 1]) / (xs[k] - xs[k - 1])
        return tab[k - 1] + w * (tab[k] - tab[k - 1])

    def columns_for(self, m: JumpMeasure) -> np.ndarray:
        """Column index of each atom mark of ``m``."""
        u = np.asarray(self.u)
        cols = []
        for mark, _ in m.atoms:
            hit = np.flatnonzero(np.abs(u - mark) <= 1e-12 * max(1.0, abs(mark)))
            if hit.size == 0:
                raise ConfigError(f"tabulated jump has no column for mark {mark}")
            cols.append(int(hit[0]))
        return np.asarray(cols, dtype=np.int64)

    def __call__(self, x, u):
        hit = np.flatnonzero(np.asarray(self.u) == float(u))
        if hit.size == 0:
            raise ConfigError(f"tabulated jump has no column for mark {u}")
        return float(self.column_values(float(x))[hit[0]])


JumpCoefficient = Union[LinearJump, TabulatedJump]


def lipschitz_constant(j: JumpCoefficient, m: JumpMeasure) -> float:
    """Tightest ``K`` with ``int |g(x,u) - g(y,u)|^2 lambda(du) <= K |x - y|^2``.

    For ``LinearJump`` this is ``theta^2 int u^2 lambda(du)``.  For a table it
    is ``sum_i w_i L_i^2`` with ``L_i`` the largest absolute segment slope of
    the column for atom ``i``, which bounds the piecewise-linear interpolant.
    """
    if isinstance(m, NoJumps):
        return 0.0
    if isinstance(j, LinearJump):
        return m_functional(j.theta, m)
    cols = j.columns_for(m)
    lip = np.max(np.abs(j.slopes()), axis=0)[cols]
    return math.fsum(w * L * L for (_, w), L in zip(m.atoms, lip))


def check_a4(j: JumpCoefficient, m: JumpMeasure) -> bool:
    """Whether ``x + s g(x, u) >= 0`` for all ``s in [0, 1]``, ``x > 0`` and atom marks."""
    if isinstance(m, NoJumps):
        return True
    if isinstance(j, LinearJump):
        # x + s*theta*x*u = x (1 + s*theta*u); worst case s = 1
        return all(1.0 + j.theta * u >= 0.0 for u, _ in m.atoms)
    xs = np.asarray(j.x)
    cols = j.columns_for(m)
    tab = j.table[:, cols]
    pos = xs > 0
    # x + g(x, u) is piecewise linear and vanishes at x = 0; check knots and the right tail
    if np.any(xs[pos, None] + tab[pos] < 0.0):
        return False
    tail = 1.0 + j.slopes()[-1, cols]
    return bool(np.all(tail >= 0.0))


# ---------------------------------------------------------------------------
# initial segment


@dataclass(frozen=True)
class HistorySegment:
    """Initial path on ``[-tau, 0]``, linearly interpolated between knots."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(v) for v in self.times)
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if not t or len(t) != len(v):
            raise ConfigError("history needs matching, nonempty time and value lists")
        if t[-1] != 0.0:
            raise ConfigError("history must end at t = 0")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ConfigError("history times must be strictly increasing")
        if any(not (math.isfinite(x) and x >= 0) for x in v):
            raise ConfigError("history values must be finite and >= 0")

    @classmethod
    def constant(cls, value: float, tau: float) -> "HistorySegment":
        if tau > 0:
            return cls((-float(tau), 0.0), (value, value))
        return cls((0.0,), (value,))

    @property
    def start(self) -> float:
        return self.times[0]

    @property
    def x0(self) -> float:
        return self.values[-1]

    def covers(self, tau: float) -> bool:
        return self.start <= -tau + 1e-12 * max(1.0, tau)

    def value(self, t):
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)[()]


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class OneFactorModel:
    beta: float
    sigma: float
    gamma: float
    tau: float
    delta: DeltaProcess
    jump: JumpCoefficient
    measure: JumpMeasure
    history: HistorySegment

    def __post_init__(self):
        for name in ("beta", "sigma", "gamma", "tau"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")
        if isinstance(self.jump, TabulatedJump):
            self.jump.columns_for(self.measure)


@dataclass(frozen=True)
class TwoFactorModel:
    beta1: float
    beta2: float
    sigma1: float
    sigma2: float
    gamma1: float
    gamma2: float
    theta1: float
    theta2: float
    measure1: JumpMeasure
    measure2: JumpMeasure
    tau: float
    delta: DeltaProcess
    history_x: HistorySegment
    history_y: HistorySegment

    def __post_init__(self):
        for name in ("beta1", "beta2", "sigma1", "sigma2", "gamma1", "gamma2", "theta1", "theta2", "tau"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")

    def x_model(self) -> OneFactorModel:
        """The first factor viewed as a one-factor model."""
        return OneFactorModel(
            beta=self.beta1,
            sigma=self.sigma1,
            gamma=self.gamma1,
            tau=self.tau,
            delta=self.delta,
            jump=LinearJump(self.theta1),
            measure=self.measure1,
            history=self.history_x,
        )


# ---------------------------------------------------------------------------
# validation


class Status(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    UNVERIFIABLE = "UNVERIFIABLE"


@dataclass(frozen=True)
class Check:
    name: str
    status: Status
    detail: str
    values: dict = field(default_factory=dict)
    # inequality checks read better as "<detail> PASS"
    detail_first: bool = False

    @property
    def passed(self) -> bool:
        return self.status is not Status.FAIL

    def line(self) -> str:
        if self.detail_first:
            return f"{self.detail} {self.status.value}"
        return f"{self.name} {self.status.value}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    """Per-assumption outcomes; ``passed`` is true when no check failed."""

    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.status is Status.FAIL]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "status": c.status.value, "detail": c.detail, "values": c.values}
                for c in self.checks
            ],
        }


def _status(ok: bool) -> Status:
    return Status.PASS if ok else Status.FAIL


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _check_rate_params(label: str, beta, sigma, gamma, theta=None, suffix="") -> Check:
    problems = []
    if not beta < 0:
        problems.append(f"β{suffix}={_fmt(beta)} is not < 0")
    if not sigma > 0:
        problems.append(f"σ{suffix}={_fmt(sigma)} is not > 0")
    if not 0.0 <= gamma < 0.5:
        problems.append(f"γ{suffix} ∉ [0, 1/2)")
    if theta is not None and not theta > 0:
        problems.append(f"ϑ{suffix}={_fmt(theta)} is not > 0")
    values = {"beta": beta, "sigma": sigma, "gamma": gamma}
    if theta is not None:
        values["theta"] = theta
    if problems:
        return Check(label, Status.FAIL, "; ".join(problems), values)
    detail = f"β{suffix}={_fmt(beta)} < 0, σ{suffix}={_fmt(sigma)} > 0, γ{suffix}={_fmt(gamma)} ∈ [0, 1/2)"
    if theta is not None:
        detail += f", ϑ{suffix}={_fmt(theta)} > 0"
    return Check(label, Status.PASS, detail, values)


def _check_a2(d: DeltaProcess) -> Check:
    if d.nu is None:
        return Check("(A2)", Status.UNVERIFIABLE, "ν is not analytic for table-driven δ", {})
    return Check("(A2)", Status.PASS, f"μ={_fmt(d.mu)} >= 1, ν={_fmt(d.nu)} >= 0", {"mu": d.mu, "nu": d.nu})


def _check_square_growth(d: DeltaProcess) -> Check:
    name = "δ² growth"
    if d.square_growth is None:
        return Check(name, Status.UNVERIFIABLE, "cannot verify for table-driven δ", {})
    theta = d.square_growth
    ok = 1.0 <= theta <= 2.0 * d.mu
    return Check(name, _status(ok), f"θ={_fmt(theta)} ∈ [1, 2μ={_fmt(2 * d.mu)}]", {"theta": theta})


def _check_a7(d: DeltaProcess) -> Check:
    if d.square_growth is None:
        return Check("(A7)", Status.UNVERIFIABLE, "cannot verify for table-driven δ", {})
    # delta^4 ~ t^(4mu-4); integrable against (1+t)^(-2 theta) iff 4mu - 4 - 2 theta < -1
    theta = d.square_growth
    ok = 4.0 * d.mu - 4.0 - 2.0 * theta < -1.0
    return Check("(A7)", _status(ok), f"∫δ⁴/(1+t)^(2θ) dt finite at θ={_fmt(theta)}", {"theta": theta})


def _check_history(h: HistorySegment, tau: float, label="history") -> Check:
    ok = h.covers(tau)
    return Check(label, _status(ok), f"ξ given on [{_fmt(h.start)}, 0], needs [-τ, 0] with τ={_fmt(tau)}", {})


def validate_one_factor(m: OneFactorModel) -> ValidationReport:
    """Check (A1)-(A4), the condition ``4 beta + K < 0`` and the forcing growth."""
    K = lipschitz_constant(m.jump, m.measure)
    a4 = check_a4(m.jump, m.measure)
    margin = 4.0 * m.beta + K
    checks = [
        _check_rate_params("(A1)", m.beta, m.sigma, m.gamma),
        _check_a2(m.delta),
        Check("(A3)", Status.PASS, f"g(0,u)=0, K={_fmt(K)}", {"K": K}),
        Check(
            "(A4)",
            _status(a4),
            "x + θg(x,u) >= 0 for θ∈[0,1], x>0" if a4 else "x + θg(x,u) < 0 for some mark",
            {},
        ),
        Check(
            "4β+K<0",
            _status(margin < 0),
            f"4β+K = {_fmt(margin)} {'<' if margin < 0 else '>='} 0",
            {"K": K, "4beta+K": margin},
            detail_first=True,
        ),
        _check_square_growth(m.delta),
        _check_history(m.history, m.tau),
    ]
    return ValidationReport(tuple(checks))


def validate_two_factor(m: TwoFactorModel) -> ValidationReport:
    """Check (A5)-(A7), the fourth-moment condition on ``Gamma`` and ``m < -4 beta1``."""
    gam = gamma_functional(m.theta1, m.measure1)
    mf1 = m_functional(m.theta1, m.measure1)
    mf2 = m_functional(m.theta2, m.measure2)
    a5 = _check_rate_params("(A5)", m.beta1, m.sigma1, m.gamma1, m.theta1, suffix="₁")
    a6 = _check_rate_params("(A6)", m.beta2, m.sigma2, m.gamma2, m.theta2, suffix="₂")
    jump2_ok = mf2 < -4.0 * m.beta2
    a6_detail = f"ϑ₂²∫u²λ₂ = {_fmt(mf2)} {'<' if jump2_ok else '>='} -4β₂ = {_fmt(-4.0 * m.beta2)}"
    a6 = Check(
        "(A6)",
        _status(a6.passed and jump2_ok),
        f"{a6.detail}; {a6_detail}",
        {**a6.values, "m2": mf2},
    )
    gam_ok = gam < -8.0 * m.beta1
    m_ok = mf1 < -4.0 * m.beta1
    a41 = check_a4(LinearJump(m.theta1), m.measure1)
    a42 = check_a4(LinearJump(m.theta2), m.measure2)
    checks = [
        a5,
        _check_a2(m.delta),
        a6,
        _check_a7(m.delta),
        Check(
            "Γ<-8β₁",
            _status(gam_ok),
            f"Γ(ϑ₁,λ₁) = {_fmt(gam)} {'<' if gam_ok else '>='} -8β₁ = {_fmt(-8.0 * m.beta1)}",
            {"Gamma": gam},
            detail_first=True,
        ),
        Check(
            "m<-4β₁",
            _status(m_ok),
            f"m(ϑ₁,λ₁) = {_fmt(mf1)} {'<' if m_ok else '>='} -4β₁ = {_fmt(-4.0 * m.beta1)}",
            {"m": mf1},
            detail_first=True,
        ),
        Check("(A4) X", _status(a41), "1 + ϑ₁u >= 0 for all marks", {}),
        Check("(A4) Y", _status(a42), "1 + ϑ₂u >= 0 for all marks", {}),
        _check_history(m.history_x, m.tau, "history X"),
        _check_history(m.history_y, m.tau, "history Y"),
    ]
    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------------------
# analytic limits


def _nu(d: DeltaProcess) -> float:
    if d.nu is None:
        raise UnknownNu("ν unknown for table-driven δ")
    return d.nu


def analytic_limit_one_factor(m: OneFactorModel) -> float:
    """``lim t^-mu int_0^t X ds = -nu / (2 beta)``."""
    return -_nu(m.delta) / (2.0 * m.beta)


def analytic_limit_two_factor(m: TwoFactorModel) -> float:
    """``lim t^-mu int_0^t Y ds = nu / (4 beta1 beta2)``."""
    return _nu(m.delta) / (4.0 * m.beta1 * m.beta2)


# ---------------------------------------------------------------------------
# JSON shapes


def _get(d: Mapping, key: str, where: str):
    try:
        return d[key]
    except (KeyError, TypeError):
        raise ConfigError(f"{where}: missing field '{key}'") from None


def _num(d: Mapping, key: str, where: str) -> float:
    v = _get(d, key, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def delta_from_dict(d: Mapping) -> DeltaProcess:
    kind = _get(d, "kind", "delta")
    if kind == "constant":
        return ConstantDelta(_num(d, "value", "delta"))
    if kind == "power_law":
        return PowerLawDelta(_num(d, "mu", "delta"))
    if kind == "table":
        return TableDelta(tuple(_get(d, "t", "delta")), tuple(_get(d, "value", "delta")))
    raise ConfigError(f"delta.kind: unknown variant {kind!r}")


def delta_to_dict(d: DeltaProcess) -> dict:
    if isinstance(d, ConstantDelta):
        return {"kind": "constant", "value": d.delta0}
    if isinstance(d, PowerLawDelta):
        return {"kind": "power_law", "mu": d.power}
    return {"kind": "table", "t": list(d.times), "value": list(d.values)}


def jump_from_dict(d: Mapping) -> JumpCoefficient:
    kind = _get(d, "kind", "jump")
    if kind == "linear":
        return LinearJump(_num(d, "theta", "jump"))
    if kind == "tabulated":
        return TabulatedJump(tuple(_get(d, "x", "jump")), tuple(_get(d, "u", "jump")), tuple(_get(d, "g", "jump")))
    raise ConfigError(f"jump.kind: unknown variant {kind!r}")


def jump_to_dict(j: JumpCoefficient) -> dict:
    if isinstance(j, LinearJump):
        return {"kind": "linear", "theta": j.theta}
    return {"kind": "tabulated", "x": list(j.x), "u": list(j.u), "g": [list(r) for r in j.g]}


def history_from_json(h: Any, tau: float, where="history") -> HistorySegment:
    """A list of ``{"t", "x"}`` points, or a bare number for a constant segment."""
    if isinstance(h, (int, float)) and not isinstance(h, bool):
        return HistorySegment.constant(float(h), tau)
    if not isinstance(h, list) or not h:
        raise ConfigError(f"{where}: expected a list of {{t, x}} points or a number")
    try:
        return HistorySegment(tuple(p["t"] for p in h), tuple(p["x"] for p in h))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{where}: malformed point ({exc})") from exc


def history_to_json(h: HistorySegment) -> list:
    return [{"t": t, "x": x} for t, x in zip(h.times, h.values)]


def model_from_dict(data: Mapping) -> OneFactorModel | TwoFactorModel:
    """Parse ``{"one_factor": {...}}`` or ``{"two_factor": {...}}``."""
    if not isinstance(data, Mapping):
        raise ConfigError("model must be a JSON object")
    if ("one_factor" in data) == ("two_factor" in data):
        raise ConfigError("model needs exactly one of 'one_factor' or 'two_factor'")
    if "one_factor" in data:
        d = data["one_factor"]
        w = "one_factor"
        tau = _num(d, "tau", w)
        return OneFactorModel(
            beta=_num(d, "beta", w),
            sigma=_num(d, "sigma", w),
            gamma=_num(d, "gamma", w),
            tau=tau,
            delta=delta_from_dict(_get(d, "delta", w)),
            jump=jump_from_dict(_get(d, "jump", w)),
            measure=measure_from_dict(_get(d, "measure", w)),
            history=history_from_json(_get(d, "history", w), tau, f"{w}.history"),
        )
    d = data["two_factor"]
    w = "two_factor"
    tau = _num(d, "tau", w)
    return TwoFactorModel(
        beta1=_num(d, "beta1", w),
        beta2=_num(d, "beta2", w),
        sigma1=_num(d, "sigma1", w),
        sigma2=_num(d, "sigma2", w),
        gamma1=_num(d, "gamma1", w),
        gamma2=_num(d, "gamma2", w),
        theta1=_num(d, "theta1", w),
        theta2=_num(d, "theta2", w),
        measure1=measure_from_dict(_get(d, "measure1", w)),
        measure2=measure_from_dict(_get(d, "measure2", w)),
        tau=tau,
        delta=delta_from_dict(_get(d, "delta", w)),
        history_x=history_from_json(_get(d, "history_x", w), tau, f"{w}.history_x"),
        history_y=history_from_json(_get(d, "history_y", w), tau, f"{w}.history_y"),
    )


def model_to_dict(m: OneFactorModel | TwoFactorModel) -> dict:
    if isinstance(m, OneFactorModel):
        return {
            "one_factor": {
                "beta": m.beta,
                "sigma": m.sigma,
                "gamma": m.gamma,
                "tau": m.tau,
                "delta": delta_to_dict(m.delta),
                "jump": jump_to_dict(m.jump),
                "measure": measure_to_dict(m.measure),
                "history": history_to_json(m.history),
            }
        }
    return {
        "two_factor": {
            "beta1": m.beta1,
            "beta2": m.beta2,
            "sigma1": m.sigma1,
            "sigma2": m.sigma2,
            "gamma1": m.gamma1,
            "gamma2": m.gamma2,
            "theta1": m.theta1,
            "theta2": m.theta2,
            "measure1": measure_to_dict(m.measure1),
            "measure2": measure_to_dict(m.measure2),
            "tau": m.tau,
            "delta": delta_to_dict(m.delta),
            "history_x": history_to_json(m.history_x),
            "history_y": history_to_json(m.history_y),
        }
    }
