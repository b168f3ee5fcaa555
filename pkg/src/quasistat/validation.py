"""Input validation helpers shared by the library and the CLI."""

import numbers

import numpy as np

from .exceptions import DomainError

__all__ = [
    "as_float_array",
    "as_state",
    "as_uniform",
    "as_probability_vector",
    "check_scalar",
    "check_positive_int",
    "maybe_scalar",
]


def as_float_array(value, name):
    """Coerce to a float ndarray and reject non-finite entries."""
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def as_state(value, name="state"):
    """Coerce to a nonnegative float array (states live in [0, inf))."""
    arr = as_float_array(value, name)
    if np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    return arr


def as_uniform(value, name="u"):
    """Coerce to an array of uniforms in the open interval (0, 1)."""
    arr = as_float_array(value, name)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"{name} must lie strictly inside (0, 1)")
    return arr


def as_probability_vector(value, name="weights", atol=1e-8):
    """Coerce to a nonnegative vector summing to 1; renormalizes exactly."""
    arr = as_float_array(value, name)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a nonempty 1-d vector")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    total = arr.sum()
    if abs(total - 1.0) > atol:
        raise DomainError(f"{name} must sum to 1 (got {total!r})")
    return arr / total


def check_scalar(value, name, minimum=None, maximum=None, *, exclusive_min=False, exclusive_max=False):
    """Validate a finite real scalar against open/closed bounds."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise DomainError(f"{name} must be finite")
    if minimum is not None:
        if exclusive_min and not value > minimum:
            raise DomainError(f"{name} must be > {minimum}, got {value}")
        if not exclusive_min and not value >= minimum:
            raise DomainError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None:
        if exclusive_max and not value < maximum:
            raise DomainError(f"{name} must be < {maximum}, got {value}")
        if not exclusive_max and not value <= maximum:
            raise DomainError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_positive_int(value, name, minimum=1):
    """Validate an integer >= minimum."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return value


def maybe_scalar(arr):
    """Return a 0-d array result as a plain float, pass arrays through."""
    arr = np.asarray(arr)
    return float(arr[()]) if arr.ndim == 0 else arr
