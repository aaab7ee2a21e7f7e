"""Numerical tolerances shared by every module.

The defaults can be overridden process-wide through :func:`set_tolerances`
or per call where a function accepts explicit tolerance arguments.
"""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-12          # unit-norm checks, zero-column detection
    optimality: float = 1e-8     # acceptable fixed-point defect for "solved"
    solver: float = 1e-10        # inner solver stopping residual
    zero: float = 1e-9           # |c_j| at or below this is an exact zero
    boundary: float = 1e-9       # width of the oracle-region boundary band


_current = Tolerances()


def get_tolerances():
    return _current


def set_tolerances(**overrides):
    """Replace selected tolerances; returns the previous record."""
    global _current
    previous = _current
    _current = replace(_current, **overrides)
    return previous
