"""Monte Carlo engine for a Cox-Ingersoll-Ross type short rate with jumps and memory."""

__version__ = "0.1.0"

from .drivers import RandomStream
from .measures import JumpMeasure, NoJumps
from .model import (
    ConstantDelta,
    HistorySegment,
    LinearJump,
    OneFactorModel,
    PowerLawDelta,
    TableDelta,
    TabulatedJump,
    TwoFactorModel,
)
from .scheme import GridSpec, SignPolicy, simulate_path

__all__ = [
    "__version__",
    "RandomStream",
    "JumpMeasure",
    "NoJumps",
    "ConstantDelta",
    "PowerLawDelta",
    "TableDelta",
    "LinearJump",
    "TabulatedJump",
    "HistorySegment",
    "OneFactorModel",
    "TwoFactorModel",
    "GridSpec",
    "SignPolicy",
    "simulate_path",
]
