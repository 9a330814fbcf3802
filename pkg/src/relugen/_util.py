"""Small numeric helpers shared across modules."""

from __future__ import annotations

import numpy as np

__all__ = ["readonly", "compensated_cumsum", "merge_intervals"]


def readonly(values, dtype=float) -> np.ndarray:
    """Copy ``values`` into an immutable ndarray."""
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


def compensated_cumsum(values) -> np.ndarray:
    """Running sums of ``values`` with a Neumaier correction term.

    Returns an array of length ``len(values) + 1`` whose first entry is 0.0.
    Used wherever breakpoints are accumulated, so that long weight vectors do
    not drift past the verification tolerances.
    """
    values = np.asarray(values, dtype=float)
    out = np.empty(values.size + 1)
    out[0] = 0.0
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values):
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out[i + 1] = total + comp
    return out


def merge_intervals(intervals, snap: float = 1e-12) -> list[tuple[float, float]]:
    """Sort interval tuples and merge any that overlap or touch within ``snap``."""
    items = sorted((lo, hi) for lo, hi in intervals if hi >= lo)
    merged: list[list[float]] = []
    for lo, hi in items:
        if merged and lo <= merged[-1][1] + snap:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]
