"""Finite jump characteristic measures on the mark space.

A measure is a finite list of atoms ``sum_i w_i * delta_{u_i}``.  The total
mass is the jump intensity and ``w_i / total_mass`` is the law of a mark.
The absence of jumps is the explicit :class:`NoJumps` variant rather than an
empty atom list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, SamplingFromEmptyMeasure

__all__ = [
    "JumpMeasure",
    "NoJumps",
    "MarkSample",
    "total_mass",
    "moment",
    "gamma_functional",
    "m_functional",
    "sample_mark",
    "sample_marks",
    "measure_from_dict",
    "measure_to_dict",
]


@dataclass(frozen=True)
class JumpMeasure:
    """Discrete finite measure given by ``(mark, weight)`` atoms."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(u), float(w)) for u, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        self._check()

    def _check(self):
        if not self.atoms:
            raise ConfigError("a jump measure needs at least one atom; use NoJumps for none")
        for u, w in self.atoms:
            if not math.isfinite(u):
                raise ConfigError(f"atom mark must be finite, got {u}")
            if not (math.isfinite(w) and w >= 0.0):
                raise ConfigError(f"atom weight must be finite and >= 0, got {w}")
        if not sum(w for _, w in self.atoms) > 0.0:
            raise ConfigError("jump measure total mass must be > 0")

    @property
    def marks(self) -> np.ndarray:
        return np.array([u for u, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @property
    def total_mass(self) -> float:
        return total_mass(self)


@dataclass(frozen=True)
class NoJumps(JumpMeasure):
    """The zero measure: no jumps ever occur."""

    atoms: tuple[tuple[float, float], ...] = ()

    def _check(self):
        if self.atoms:
            raise ConfigError("NoJumps carries no atoms")


@dataclass(frozen=True)
class MarkSample:
    """A mark drawn from a measure, with the index of its atom."""

    u: float
    index: int


def total_mass(m: JumpMeasure) -> float:
    """Return ``lambda(U)``, the sum of atom weights (0 for ``NoJumps``)."""
    return math.fsum(w for _, w in m.atoms)


def moment(m: JumpMeasure, k: int) -> float:
    """Return ``int u^k lambda(du)``."""
    if k < 1:
        raise ValueError(f"moment order must be >= 1, got {k}")
    return math.fsum(w * u**k for u, w in m.atoms)


def gamma_functional(theta1: float, m: JumpMeasure) -> float:
    """Fourth-moment jump functional ``theta^2 int u^2 (6 + 4 theta u + theta^2 u^2) lambda(du)``.

    The two-factor fourth-moment bound requires this to be below ``-8*beta1``.
    """
    t = float(theta1)
    return t * t * math.fsum(w * u * u * (6.0 + 4.0 * t * u + t * t * u * u) for u, w in m.atoms)


def m_functional(theta1: float, m: JumpMeasure) -> float:
    """Second-moment jump functional ``theta^2 int u^2 lambda(du)``."""
    if not m.atoms:
        return 0.0
    return float(theta1) ** 2 * moment(m, 2)


def _cumulative(m: JumpMeasure) -> np.ndarray:
    return np.cumsum(m.weights)


def sample_marks(m: JumpMeasure, rng, size: int) -> np.ndarray:
    """Draw ``size`` atom indices with probabilities ``w_i / total_mass``.

    Inverse transform on the cumulative weights: ``v = U * total`` selects the
    first atom whose cumulative weight exceeds ``v``, so zero-weight atoms are
    never chosen.
    """
    if isinstance(m, NoJumps) or not m.atoms:
        raise SamplingFromEmptyMeasure("cannot sample a mark from NoJumps")
    gen = getattr(rng, "generator", rng)
    cum = _cumulative(m)
    v = gen.random(size) * cum[-1]
    idx = np.searchsorted(cum, v, side="right")
    return np.minimum(idx, len(cum) - 1)


def sample_mark(m: JumpMeasure, rng) -> MarkSample:
    """Draw one mark from the normalized measure."""
    i = int(sample_marks(m, rng, 1)[0])
    return MarkSample(u=m.atoms[i][0], index=i)


def measure_from_dict(data: Mapping[str, Any]) -> JumpMeasure:
    """Parse ``{"atoms": [{"u": .., "w": ..}, ...]}`` or ``{"no_jumps": true}``."""
    if not isinstance(data, Mapping):
        raise ConfigError(f"measure must be an object, got {type(data).__name__}")
    if data.get("no_jumps"):
        if data.get("atoms"):
            raise ConfigError("measure cannot set both no_jumps and atoms")
        return NoJumps()
    atoms = data.get("atoms")
    if not isinstance(atoms, list):
        raise ConfigError("measure needs an 'atoms' list or 'no_jumps': true")
    try:
        return JumpMeasure(tuple((a["u"], a["w"]) for a in atoms))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed atom in measure: {exc}") from exc


def measure_to_dict(m: JumpMeasure) -> dict:
    if isinstance(m, NoJumps):
        return {"no_jumps": True}
    return {"atoms": [{"u": u, "w": w} for u, w in m.atoms]}
