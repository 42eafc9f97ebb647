import numpy as np
import pytest
from scipy import stats

from jumpcir.drivers import (
    BROWNIAN,
    JUMP_MARKS,
    JUMP_TIMES,
    RandomStream,
    gaussian_increment,
    gaussian_increments,
    jump_arrays_in,
    jump_events_in,
    next_jump_time,
)
from jumpcir.errors import NonpositiveStep
from jumpcir.measures import JumpMeasure, NoJumps


def test_gaussian_unit_variance():
    z = gaussian_increments(RandomStream(1, 0), 1.0, 10**6)
    assert abs(z.mean()) < 0.004
    assert abs(z.var() - 1.0) < 0.01


def test_gaussian_variance_scales():
    z = gaussian_increments(RandomStream(1, 1), 0.25, 10**6)
    assert abs(z.var() / 0.25 - 1.0) < 0.01


def test_scalar_and_vector_draws_agree():
    a = [gaussian_increment(RandomStream(9, 3), 0.5)]
    b = gaussian_increments(RandomStream(9, 3), 0.5, 1)
    assert a[0] == b[0]
    rng = RandomStream(9, 4)
    seq = [gaussian_increment(rng, 0.1) for _ in range(50)]
    np.testing.assert_array_equal(seq, gaussian_increments(RandomStream(9, 4), 0.1, 50))


@pytest.mark.parametrize("dt", [0.0, -1.0])
def test_nonpositive_step(dt):
    with pytest.raises(NonpositiveStep):
        gaussian_increment(RandomStream(0), dt)
    with pytest.raises(NonpositiveStep):
        gaussian_increments(RandomStream(0), dt, 3)


def test_next_jump_time():
    rng = RandomStream(5, 0)
    assert next_jump_time(rng, 0.0, 3.0) is None
    gaps = np.array([next_jump_time(rng, 2.0, 0.0) for _ in range(10**6)])
    assert abs(gaps.mean() / 0.5 - 1.0) < 0.01
    assert all(next_jump_time(rng, 1.0, 10.0) > 10.0 for _ in range(1000))


def test_no_jumps_measure():
    assert jump_events_in(RandomStream(0), NoJumps(), 0.0, 100.0) == []


def test_event_times_ordered_and_in_window():
    m = JumpMeasure(((1.0, 2.0), (-0.5, 1.0)))
    rng = RandomStream(17, 2)
    for t0 in (0.0, 3.5, 100.0):
        ev = jump_events_in(rng, m, t0, t0 + 40.0)
        t = np.array([e.time for e in ev])
        assert len(t) > 0
        assert np.all(np.diff(t) > 0)
        assert np.all((t > t0) & (t <= t0 + 40.0))
        assert {e.mark for e in ev} <= {1.0, -0.5}


def _counts(m, trials, length, seed=123):
    rng = RandomStream(seed, 0)
    tr, mr = rng.substream(JUMP_TIMES), rng.substream(JUMP_MARKS)
    return [jump_arrays_in(tr, mr, m, 0.0, length) for _ in range(trials)]


def test_poisson_counts():
    # 8000 trials put the 5% variance band at about 3 standard errors
    counts = np.array([len(t) for t, _ in _counts(JumpMeasure(((1.0, 1.0),)), 8000, 1e4)])
    assert abs(counts.mean() / 1e4 - 1.0) < 0.02
    assert abs(counts.var(ddof=1) / counts.mean() - 1.0) < 0.05


def test_block_draws_match_sequential_arrivals():
    m = JumpMeasure(((1.0, 3.0),))
    times, _ = jump_arrays_in(RandomStream(4).substream(1), RandomStream(4).substream(2), m, 2.0, 50.0)
    rng = RandomStream(4).substream(1)
    seq, t = [], 2.0
    while True:
        t = next_jump_time(rng, 3.0, t)
        if t > 50.0:
            break
        seq.append(t)
    np.testing.assert_allclose(times, seq, rtol=1e-12)


def test_thinning():
    m = JumpMeasure(((0.0, 0.3), (1.0, 0.7)))
    runs = _counts(m, 2000, 1000.0, seed=77)
    first = [t[idx == 0] for t, idx in runs]
    n = np.array([len(t) for t in first])
    assert abs(n.mean() / 300.0 - 1.0) < 0.02
    assert abs(n.var(ddof=1) / n.mean() - 1.0) < 0.1
    gaps = np.concatenate([np.diff(np.concatenate(([0.0], t))) for t in first[:50]])
    assert stats.kstest(gaps, "expon", args=(0, 1 / 0.3)).pvalue > 0.001


def test_streams_reproducible():
    a = RandomStream(2024, 7)
    b = RandomStream(2024, 7)
    np.testing.assert_array_equal(
        gaussian_increments(a.substream(BROWNIAN), 1.0, 100),
        gaussian_increments(b.substream(BROWNIAN), 1.0, 100),
    )


def test_substreams_are_cached():
    rng = RandomStream(8)
    assert rng.substream(0) is rng.substream(0)
    first = gaussian_increment(rng.substream(0), 1.0)
    assert gaussian_increment(rng.substream(0), 1.0) != first


def test_cross_stream_correlation():
    n = 10**5
    a = gaussian_increments(RandomStream(99, 0), 1.0, n)
    b = gaussian_increments(RandomStream(99, 1), 1.0, n)
    c = gaussian_increments(RandomStream(99, 0).substream(BROWNIAN), 1.0, n)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.01


def test_seed_range():
    with pytest.raises(ValueError):
        RandomStream(-1)
    RandomStream(2**64 - 1, 2**64 - 1)
