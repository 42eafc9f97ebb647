import pytest

from jumpcir.measures import JumpMeasure, NoJumps
from jumpcir.model import (
    ConstantDelta,
    HistorySegment,
    LinearJump,
    OneFactorModel,
    TwoFactorModel,
)

UNIT_ATOM = JumpMeasure(((1.0, 1.0),))


def one_factor(
    beta=-0.5,
    sigma=0.3,
    gamma=0.25,
    tau=1.0,
    delta0=1.0,
    theta=0.1,
    measure=UNIT_ATOM,
    x0=1.0,
    delta=None,
    history=None,
):
    return OneFactorModel(
        beta=beta,
        sigma=sigma,
        gamma=gamma,
        tau=tau,
        delta=delta if delta is not None else ConstantDelta(delta0),
        jump=LinearJump(theta),
        measure=measure,
        history=history if history is not None else HistorySegment.constant(x0, tau),
    )


def deterministic(beta=-0.5, delta0=1.0, x0=0.0, delta=None):
    return one_factor(beta=beta, sigma=0.0, gamma=0.0, tau=0.0, delta0=delta0, theta=0.0,
                      measure=NoJumps(), x0=x0, delta=delta)  # fmt: skip


def two_factor(
    beta1=-0.5,
    beta2=-0.5,
    sigma1=0.3,
    sigma2=0.3,
    theta1=0.1,
    theta2=0.1,
    measure1=UNIT_ATOM,
    measure2=UNIT_ATOM,
    delta0=1.0,
    tau=1.0,
    x0=1.0,
    y0=1.0,
    gamma=0.25,
):
    return TwoFactorModel(
        beta1=beta1,
        beta2=beta2,
        sigma1=sigma1,
        sigma2=sigma2,
        gamma1=gamma,
        gamma2=gamma,
        theta1=theta1,
        theta2=theta2,
        measure1=measure1,
        measure2=measure2,
        tau=tau,
        delta=ConstantDelta(delta0),
        history_x=HistorySegment.constant(x0, tau),
        history_y=HistorySegment.constant(y0, tau),
    )


@pytest.fixture
def baseline():
    return one_factor()


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
