"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a ``criterion N PASS/FAIL: ...`` line that is printed in
the terminal summary (and immediately with ``-s``).  Run with::

    pytest tests/test_acceptance.py -v
"""

import math
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, UNIT_ATOM, deterministic, one_factor, two_factor
from jumpcir.estimators import delta_limit_estimate, mean_ode_oracle
from jumpcir.harness import ExperimentConfig, load_config, run_experiment
from jumpcir.measures import JumpMeasure, gamma_functional, m_functional
from jumpcir.model import PowerLawDelta, validate_one_factor, validate_two_factor
from jumpcir.scheme import GridSpec, SignPolicy, simulate_path

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)


def config(model, h, T, paths, checkpoints=None, seed=20240601, tol=0.05, **kw):
    grid = GridSpec(h, T)
    if checkpoints is None:
        checkpoints = [T / 16, T / 8, T / 4, T / 2, T]
    return ExperimentConfig(model=model, grid=grid, paths=paths, seed=seed, mu=1.0,
                            checkpoints=checkpoints, tolerance=tol, **kw)  # fmt: skip


def test_criterion_1_one_factor_limit():
    m = one_factor()
    report, _, manifest = run_experiment(config(m, 0.05, 2000.0, 256))
    rel = report.final.rel_error
    osc = report.max_path_oscillation
    ok = rel <= 0.05 and osc < 0.10
    record(1, ok, f"mean R(T) = {report.final.mean:.5f} (limit 1.0, rel err {rel:.2e} <= 0.05), "
                  f"max path oscillation on [T/10, T] = {osc:.4f} < 0.10, {manifest.wall_time:.1f}s")  # fmt: skip
    assert rel <= 0.05
    assert osc < 0.10


def test_criterion_2_two_factor_limit():
    m = two_factor()
    rep = validate_two_factor(m)
    gam = rep["Γ<-8β₁"].values["Gamma"]
    jump2 = rep["(A6)"].values["m2"]
    report, _, _ = run_experiment(config(m, 0.05, 2000.0, 256, seed=20240602, tol=0.07))
    rel = report.final.rel_error
    ok = rep.passed and math.isclose(gam, 0.0641, rel_tol=1e-12) and math.isclose(jump2, 0.01, rel_tol=1e-12)
    ok = ok and gam < 4 and jump2 < 2 and rel <= 0.07
    record(2, ok, f"Γ = {gam:.4f} < 4, ϑ₂²∫u²λ₂ = {jump2:.4f} < 2, "
                  f"mean Y return = {report.final.mean:.5f} (limit 1.0, rel err {rel:.2e} <= 0.07)")  # fmt: skip
    assert rep.passed
    assert gam == pytest.approx(0.0641, rel=1e-12) and gam < 4
    assert jump2 == pytest.approx(0.01, rel=1e-12) and jump2 < 2
    assert rel <= 0.07


def test_criterion_3_mean_oracle():
    m = one_factor()
    # frozen before any simulation: the history starts at the fixed point -nu/(2 beta) = 1,
    # so m' = 2 beta m + delta keeps m(t) = 1 for all t
    frozen = {1.0: 1.0, 5.0: 1.0, 20.0: 1.0}
    assert mean_ode_oracle(m, np.array(list(frozen))) == pytest.approx(list(frozen.values()), abs=1e-15)
    _, moments, man = run_experiment(config(m, 0.05, 20.0, 10_000, checkpoints=list(frozen)))
    zs = [(r.mean_x - frozen[r.t]) / r.se_x for r in moments.rows]
    ok = all(abs(z) <= 4 for z in zs)
    record(3, ok, "E X(t) vs oracle at t = 1, 5, 20: "
                  + ", ".join(f"{r.mean_x:.4f} (z = {z:+.2f})" for r, z in zip(moments.rows, zs))
                  + ", |z| <= 4 over 10^4 paths")  # fmt: skip
    assert man.metrics["oracle_max_abs_z"] == pytest.approx(max(abs(z) for z in zs))
    assert ok


def test_criterion_4_nonnegativity():
    # a Feller-violating but assumption-satisfying model, so the |x| policy does go negative
    m = one_factor(delta0=0.1, sigma=1.0)
    assert validate_one_factor(m).passed
    T = 100.0
    trunc_min = min(
        simulate_path(m, GridSpec(0.05, T), SignPolicy.TRUNCATION, seed=404, stream_id=s).x.values.min()
        for s in range(1000)
    )
    fractions = []
    for h in (0.1, 0.05, 0.025):
        grid = GridSpec(h, T)
        vals = np.concatenate([simulate_path(m, grid, SignPolicy.ABSOLUTE, seed=404, stream_id=s).x.values
                               for s in range(64)])  # fmt: skip
        fractions.append(float(np.mean(vals < 0)))
    decreasing = fractions[0] > fractions[1] > fractions[2]
    ok = trunc_min >= 0.0 and decreasing
    record(4, ok, f"truncation min over 10^3 paths = {trunc_min:g} >= 0; negative fraction under |x| "
                  f"for h = 0.1, 0.05, 0.025: {', '.join(f'{f:.4f}' for f in fractions)} (decreasing)")  # fmt: skip
    assert trunc_min >= 0.0
    assert fractions[0] > 0
    assert decreasing


def test_criterion_5_second_moment_bounded():
    T = 200.0
    cps = [T / 4, T / 2, T]
    _, moments, _ = run_experiment(config(one_factor(), 0.05, T, 10_000, checkpoints=cps))
    second = [r.mean_x2 for r in moments.rows]
    ratio = second[-1] / second[0]
    ok = ratio < 1.5
    record(5, ok, f"E X^2 at T/4, T/2, T = {', '.join(f'{s:.4f}' for s in second)}; final/initial = {ratio:.4f} < 1.5")
    assert ok


def test_criterion_6_euler_order():
    m = deterministic(beta=-0.5, delta0=1.0, x0=0.0)
    errs = []
    for h in (0.1, 0.05, 0.025):
        p = simulate_path(m, GridSpec(h, 10.0))
        errs.append(float(np.max(np.abs(p.x.values - (-np.expm1(-p.times))))))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = all(1.7 <= r <= 2.3 for r in ratios)
    record(6, ok, f"max errors {', '.join(f'{e:.3e}' for e in errs)}; ratios {ratios[0]:.3f}, {ratios[1]:.3f} in [1.7, 2.3]")
    assert ok


def test_criterion_7_delta_limit():
    est = delta_limit_estimate(PowerLawDelta(2.0), 1000.0, 2.0)
    ok = abs(est - 0.5) <= 1e-6
    record(7, ok, f"power law mu = 2 at t = 1000: {est!r} (|err| = {abs(est - 0.5):.1e} <= 1e-6)")
    assert ok


def test_criterion_8_validator_arithmetic():
    a = lambda *pairs: JumpMeasure(pairs)  # noqa: E731
    functionals = [
        (gamma_functional(0.1, UNIT_ATOM), 0.0641),
        (gamma_functional(0.0, a((1.0, 1.0), (2.0, 3.0))), 0.0),
        (gamma_functional(1.0, a((1.0, 2.0))), 22.0),
        (m_functional(0.1, UNIT_ATOM), 0.01),
        (m_functional(0.0, a((1.0, 1.0), (2.0, 3.0))), 0.0),
        (m_functional(2.0, a((0.5, 4.0))), 4.0),
    ]
    arith_ok = all(abs(got - want) <= 1e-12 * max(abs(want), 1e-300) for got, want in functionals)
    one = [
        (validate_one_factor(one_factor()).passed, True),
        (validate_one_factor(one_factor(beta=-0.001)).passed, False),
        (validate_one_factor(one_factor(gamma=0.5)).passed, False),
    ]
    failing = validate_one_factor(one_factor(beta=-0.001)).failures
    gamma_fail = validate_one_factor(one_factor(gamma=0.5)).failures
    two = [
        (validate_two_factor(two_factor()).passed, True),
        (validate_two_factor(two_factor(theta1=2.0)).passed, False),
        (validate_two_factor(two_factor(theta1=0.0)).passed, False),
    ]
    big = validate_two_factor(two_factor(theta1=2.0))
    names_ok = (
        [c.name for c in failing] == ["4β+K<0"]
        and [c.name for c in gamma_fail] == ["(A1)"]
        # m = 4 >= 2 fails alongside Γ here
        and [c.name for c in big.failures] == ["Γ<-8β₁", "m<-4β₁"]
        and big["Γ<-8β₁"].values["Gamma"] == pytest.approx(72.0, rel=1e-12)
        and "(A5)" in [c.name for c in validate_two_factor(two_factor(theta1=0.0)).failures]
    )
    verdicts_ok = all(got is want for got, want in one + two)
    ok = arith_ok and verdicts_ok and names_ok
    record(8, ok, f"6 functional values to 1e-12 rel: {arith_ok}; 6 validator verdicts as expected: "
                  f"{verdicts_ok}; failing checks named correctly: {names_ok}")  # fmt: skip
    assert arith_ok
    assert verdicts_ok
    assert names_ok


@pytest.mark.parametrize("name", ["one_factor", "two_factor"])
def test_criterion_9_reproducibility(tmp_path, name):
    cfg = load_config(CONFIGS / f"{name}.json")
    run_experiment(cfg, workers=1, output_dir=tmp_path / "a")
    run_experiment(cfg, workers=1, output_dir=tmp_path / "b")
    run_experiment(cfg, workers=8, output_dir=tmp_path / "c")
    a, b, c = ((tmp_path / d / "report.json").read_bytes() for d in "abc")
    same_seed = a == b
    across_workers = a == c
    ok = same_seed and across_workers
    prev = ACCEPTANCE_LINES.get(9)
    detail = f"{name}: rerun byte-identical {same_seed}, workers 1 vs 8 byte-identical {across_workers}"
    if prev is not None and prev.startswith("criterion 9"):
        ok = ok and " PASS:" in prev
        detail = prev.split(": ", 1)[1] + "; " + detail
    record(9, ok, detail)
    assert same_seed
    assert across_workers
