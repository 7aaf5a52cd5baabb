"""Input validation helpers shared across the package.

These mirror the conventions of scikit-learn's ``check_array`` family:
validate early, raise ``ValueError`` with a message naming the offending
argument, and return a canonicalized numpy array so callers can rely on
dtype and shape.
"""

from __future__ import annotations

import numpy as np


def as_mono_f64(samples, name: str = "samples") -> np.ndarray:
    """Coerce ``samples`` to a 1-D float64 array, rejecting multichannel input."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be mono (1-D), got shape {arr.shape}")
    return arr


def check_positive(value, name: str):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value


def check_in_range(value, lo, hi, name: str, *, lo_open: bool = False, hi_open: bool = False):
    """Validate ``lo <(=) value <(=) hi``."""
    too_low = value <= lo if lo_open else value < lo
    too_high = value >= hi if hi_open else value > hi
    if too_low or too_high:
        lo_b = "(" if lo_open else "["
        hi_b = ")" if hi_open else "]"
        raise ValueError(f"{name} must be in {lo_b}{lo}, {hi}{hi_b}, got {value!r}")
    return value


def check_power_of_two(value: int, name: str) -> int:
    if value < 1 or (value & (value - 1)) != 0:
        raise ValueError(f"{name} must be a power of two, got {value!r}")
    return value


def as_matrix_f64(x, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-D float64 matrix."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_intervals(intervals, name: str = "intervals") -> list[tuple[float, float]]:
    """Validate a sorted, disjoint interval list and return it as float tuples."""
    out: list[tuple[float, float]] = []
    prev_end = None
    for i, pair in enumerate(intervals):
        start, end = float(pair[0]), float(pair[1])
        if not start < end:
            raise ValueError(f"{name}[{i}] has start {start} >= end {end}")
        if prev_end is not None and start < prev_end:
            raise ValueError(f"{name} not sorted/disjoint at index {i}")
        out.append((start, end))
        prev_end = end
    return out


def check_same_shape(a: np.ndarray, b: np.ndarray, name_a: str, name_b: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{name_a} shape {a.shape} != {name_b} shape {b.shape}")
