"""Seedable random streams and the stochastic inputs of one path.

Every path owns a :class:`RandomStream` keyed by ``(seed, stream_id)``.  The
stream is a counter-based Philox generator whose key comes from
``numpy.random.SeedSequence(seed, spawn_key=(stream_id, ...))``, so streams
with different ids are independent and a stream never depends on how many
other streams exist.  Brownian, jump-time and mark draws use disjoint
substreams, so changing the jump measure leaves the Brownian path untouched.

Normals come from numpy's ziggurat sampler and exponentials from its
``standard_exponential``; marks use inverse transform on cumulative weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveStep
from .measures import JumpMeasure, NoJumps, sample_marks, total_mass

__all__ = [
    "RandomStream",
    "JumpEvent",
    "BROWNIAN",
    "JUMP_TIMES",
    "JUMP_MARKS",
    "gaussian_increment",
    "gaussian_increments",
    "next_jump_time",
    "jump_events_in",
    "jump_arrays_in",
]

# substream tags
BROWNIAN = 0
JUMP_TIMES = 1
JUMP_MARKS = 2

_MAX_U64 = 2**64 - 1


class RandomStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Parameters
    ----------
    seed : int
        Base seed, ``0 <= seed < 2**64``.
    stream_id : int
        Path index, ``0 <= stream_id < 2**64``.
    key : tuple of int
        Extra spawn-key components selecting a substream.
    """

    __slots__ = ("seed", "stream_id", "key", "generator", "_children")

    def __init__(self, seed: int, stream_id: int = 0, key: tuple[int, ...] = ()):
        for name, v in (("seed", seed), ("stream_id", stream_id)):
            if not (0 <= int(v) <= _MAX_U64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *self.key))
        self.generator = np.random.Generator(np.random.Philox(ss))
        self._children = {}

    def substream(self, *key: int) -> "RandomStream":
        """Return the independent child stream tagged ``key``.

        Children are cached, so repeated calls continue the same sequence.
        """
        key = tuple(int(k) for k in key)
        child = self._children.get(key)
        if child is None:
            child = self._children[key] = RandomStream(self.seed, self.stream_id, self.key + key)
        return child

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, key={self.key})"


@dataclass(frozen=True)
class JumpEvent:
    time: float
    mark: float
    index: int = 0


def _check_dt(dt: float):
    if not dt > 0.0:
        raise NonpositiveStep(f"time step must be > 0, got {dt}")


def gaussian_increment(rng: RandomStream, dt: float) -> float:
    """One Brownian increment ``~ Normal(0, dt)``."""
    _check_dt(dt)
    return float(rng.generator.standard_normal()) * np.sqrt(dt)


def gaussian_increments(rng: RandomStream, dt: float, n: int) -> np.ndarray:
    """``n`` independent Brownian increments over steps of length ``dt``."""
    _check_dt(dt)
    return rng.generator.standard_normal(n) * np.sqrt(dt)


def next_jump_time(rng: RandomStream, rate: float, after: float) -> float | None:
    """Arrival time following ``after`` for a Poisson process of intensity ``rate``.

    Returns ``None`` when ``rate == 0``.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if rate == 0:
        return None
    return after + float(rng.generator.standard_exponential()) / rate


def jump_arrays_in(
    times_rng: RandomStream,
    marks_rng: RandomStream,
    m: JumpMeasure,
    t0: float,
    t1: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Jump times in ``(t0, t1]`` and the atom index of each mark, as arrays.

    Interarrival times are exponential with mean ``1 / total_mass(m)``; they
    are drawn in blocks and accumulated left to right, which gives the same
    arrival times as repeated :func:`next_jump_time` calls on ``times_rng``.
    """
    if not t0 < t1:
        raise ValueError(f"need t0 < t1, got ({t0}, {t1})")
    rate = total_mass(m)
    if isinstance(m, NoJumps) or rate == 0.0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    gen = times_rng.generator
    expected = rate * (t1 - t0)
    block = int(expected + 6.0 * np.sqrt(expected) + 16)
    chunks = []
    last = t0
    while True:
        arrivals = np.cumsum(np.concatenate(([last], gen.standard_exponential(block) / rate)))[1:]
        inside = arrivals[arrivals <= t1]
        chunks.append(inside)
        if len(inside) < block:
            break
        last = arrivals[-1]
    times = np.concatenate(chunks)
    idx = sample_marks(m, marks_rng, len(times)).astype(np.int64)
    return times, idx


def jump_events_in(rng: RandomStream, m: JumpMeasure, t0: float, t1: float) -> list[JumpEvent]:
    """Poisson jump events of ``m`` in ``(t0, t1]`` using the jump substreams of ``rng``."""
    times, idx = jump_arrays_in(rng.substream(JUMP_TIMES), rng.substream(JUMP_MARKS), m, t0, t1)
    marks = m.marks
    return [JumpEvent(float(t), float(marks[i]), int(i)) for t, i in zip(times, idx)]
