"""Small input checks shared by the public entry points."""

import os
from fractions import Fraction

BUDGET_ENV = "OUTERSPACE_BUDGET"


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def as_fraction(value, name="value"):
    """Parse ints, Fractions and 'p/q' strings exactly. Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError(f"{name} must be rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as exc:
            raise ValueError(f"{name}: cannot parse {value!r} as a rational") from exc
    raise TypeError(f"{name} must be an int, Fraction or 'p/q' string, not {type(value).__name__}")


def budget(requested, default=None):
    """Clamp a requested budget by the global ceiling from the environment."""
    value = default if requested is None else requested
    ceiling = os.environ.get(BUDGET_ENV)
    if ceiling:
        try:
            cap = int(ceiling)
        except ValueError:
            raise ValueError(f"{BUDGET_ENV} must be an integer, got {ceiling!r}")
        if value is None or value > cap:
            return cap
    return value
