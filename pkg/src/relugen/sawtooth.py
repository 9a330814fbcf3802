"""Sawtooth maps: the tent map, its iterates, and interval-scaled variants.

The tent map ``g`` doubles frequencies under composition: the s-fold
iterate ``g_s`` has ``2**(s-1)`` teeth on ``[0, 1]`` and vanishes outside.
Scaled copies ``g_s_delta`` squeeze those teeth into an arbitrary interval
with amplitude ``1/n``; ``h_s_delta`` additionally appends a ramp that
saturates at ``1/n``, which is what lifts a transport map from one histogram
row to the next.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "eval_g",
    "eval_gs",
    "eval_g_delta",
    "eval_h_delta",
    "h_delta_split",
    "gs_decomposition_term",
]


def _maybe_scalar(out: np.ndarray, like) -> float | np.ndarray:
    return float(out) if np.isscalar(like) or np.ndim(like) == 0 else out


def eval_g(x):
    """Tent map: ``2x`` on ``[0, 1/2)``, ``2(1-x)`` on ``[1/2, 1]``, else 0."""
    x_arr = np.asarray(x, dtype=float)
    out = np.where(x_arr < 0.5, 2.0 * x_arr, 2.0 * (1.0 - x_arr))
    out = np.where((x_arr < 0.0) | (x_arr > 1.0), 0.0, out)
    return _maybe_scalar(out, x)


def eval_gs(s: int, x):
    """s-fold composition of the tent map, evaluated by iterating ``eval_g``."""
    if s < 1:
        raise ValueError(f"sawtooth order must be at least 1, got {s}")
    out = np.asarray(x, dtype=float)
    for _ in range(s):
        out = eval_g(out)
    return _maybe_scalar(np.asarray(out), x)


def eval_g_delta(s: int, a: float, b: float, n: int, x):
    """Teeth of amplitude ``1/n`` filling ``[a, b]``: ``g_s((x-a)/(b-a)) / n``."""
    if b <= a:
        raise ValueError(f"interval must satisfy a < b, got [{a}, {b}]")
    if n < 1:
        raise ValueError(f"amplitude divisor n must be positive, got {n}")
    x_arr = np.asarray(x, dtype=float)
    out = eval_gs(s, (x_arr - a) / (b - a)) / n
    return _maybe_scalar(np.asarray(out), x)


def h_delta_split(s: int, a: float, b: float) -> float:
    """Interior split point ``b~ = a + 2**s (b-a) / (1 + 2**s)`` of ``h_s_delta``."""
    return a + (b - a) * (2.0**s / (1.0 + 2.0**s))


def eval_h_delta(s: int, a: float, b: float, n: int, x):
    """Teeth on ``[a, b~]`` plus a ramp to ``1/n`` on ``[b~, b]``, then constant.

    The ramp ``(max(0, x-b~) - max(0, x-b)) / (n (b-b~))`` climbs linearly
    from 0 to ``1/n`` and stays there for all ``x > b``.

    Examples
    --------
    >>> eval_h_delta(2, 0.0, 1.0, 1, 0.9)
    0.5
    """
    if b <= a:
        raise ValueError(f"interval must satisfy a < b, got [{a}, {b}]")
    if n < 1:
        raise ValueError(f"amplitude divisor n must be positive, got {n}")
    bt = h_delta_split(s, a, b)
    x_arr = np.asarray(x, dtype=float)
    teeth = eval_g_delta(s, a, bt, n, x_arr)
    ramp = (np.maximum(x_arr - bt, 0.0) - np.maximum(x_arr - b, 0.0)) / (n * (b - bt))
    return _maybe_scalar(teeth + ramp, x)


def gs_decomposition_term(s: int, k: int, x):
    """Term ``g(2**(s-1) x - k)`` of the expansion of ``f(g_s(x))``.

    For continuous ``f`` with ``f(0) = 0`` the composition splits as
    ``f(g_s(x)) = sum_k f(g(2**(s-1) x - k))`` with ``k`` ranging over
    ``0 .. 2**(s-1) - 1``; term ``k`` is supported on one tooth.
    """
    if s < 1:
        raise ValueError(f"sawtooth order must be at least 1, got {s}")
    if not 0 <= k < 2 ** (s - 1):
        raise ValueError(f"term index {k} out of range for order {s}")
    x_arr = np.asarray(x, dtype=float)
    return _maybe_scalar(np.asarray(eval_g(2.0 ** (s - 1) * x_arr - k)), x)
