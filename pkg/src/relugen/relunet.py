"""Explicit ReLU networks with exact connectivity accounting.

A network is a chain of affine layers with ReLU activations between them and
none after the last layer.  Connectivity is the number of non-zero entries
across all weight matrices and bias vectors; depth is the number of affine
layers.  The constructors below build the sawtooth and piecewise-linear
primitives, and `compose` / `extend_depth` / `parallelize` / `sum_networks`
assemble them without ever changing the realized function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._util import readonly
from .pwl import PwlFunction

__all__ = [
    "AffineLayer",
    "ReluNetwork",
    "eval_network",
    "connectivity",
    "depth",
    "width",
    "make_g_network",
    "make_gs_network",
    "make_pwl_network",
    "make_identity_network",
    "compose",
    "extend_depth",
    "parallelize",
    "sum_networks",
    "network_to_dict",
    "network_from_dict",
    "save_network",
    "load_network",
]


@dataclass(frozen=True)
class AffineLayer:
    """One affine map ``x -> A @ x + b``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise ValueError(f"bias length {b.size} does not match {A.shape[0]} output rows")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("layer entries must be finite")
        object.__setattr__(self, "A", readonly(A))
        object.__setattr__(self, "b", readonly(b))

    @property
    def in_dim(self) -> int:
        return self.A.shape[1]

    @property
    def out_dim(self) -> int:
        return self.A.shape[0]

    @property
    def nonzeros(self) -> int:
        return int(np.count_nonzero(self.A) + np.count_nonzero(self.b))


@dataclass(frozen=True)
class ReluNetwork:
    """A chain of affine layers; ReLU between layers, none after the last."""

    layers: tuple[AffineLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 2:
            raise ValueError(f"a network needs at least two affine layers, got {len(layers)}")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.in_dim != prev.out_dim:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.out_dim} feeds {nxt.in_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def __call__(self, x):
        return eval_network(self, x)


def eval_network(net: ReluNetwork, x):
    """Forward pass.  Accepts a scalar, ``(N,)`` for 1-D inputs, or ``(N, d)``.

    Scalar input returns a float (1-D output) or a vector; batched input
    returns ``(N,)`` or ``(N, out_dim)`` accordingly.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    if scalar:
        x_arr = x_arr.reshape(1, 1)
    elif x_arr.ndim == 1:
        if net.input_dim != 1:
            raise ValueError(f"flat input only valid for input_dim=1, network takes {net.input_dim}")
        x_arr = x_arr[:, None]
    if x_arr.shape[1] != net.input_dim:
        raise ValueError(f"input has {x_arr.shape[1]} features, network takes {net.input_dim}")
    h = x_arr
    for layer in net.layers[:-1]:
        h = np.maximum(h @ layer.A.T + layer.b, 0.0)
    last = net.layers[-1]
    h = h @ last.A.T + last.b
    if scalar:
        return float(h[0, 0]) if net.output_dim == 1 else h[0]
    return h[:, 0] if net.output_dim == 1 else h


def connectivity(net: ReluNetwork) -> int:
    """Total number of non-zero weight and bias entries."""
    return sum(layer.nonzeros for layer in net.layers)


def depth(net: ReluNetwork) -> int:
    """Number of affine layers."""
    return len(net.layers)


def width(net: ReluNetwork) -> int:
    """Maximum layer dimension, the input included."""
    return max(net.input_dim, *(layer.out_dim for layer in net.layers))


def make_g_network() -> ReluNetwork:
    """Two-layer tent map: ``2 rho(x) - 4 rho(x - 1/2) + 2 rho(x - 1)``.

    Realizes the tent map exactly on all of R (zero outside ``[0, 1]``) with
    connectivity 8.
    """
    first = AffineLayer(A=[[1.0], [1.0], [1.0]], b=[0.0, -0.5, -1.0])
    last = AffineLayer(A=[[2.0, -4.0, 2.0]], b=[0.0])
    return ReluNetwork(layers=(first, last))


def make_gs_network(s: int) -> ReluNetwork:
    """Depth ``s+1`` network for the s-fold tent iterate.

    The middle layers re-expand the running tent value into the three shifted
    channels, so connectivity is exactly ``11 s - 3``.
    """
    if s < 1:
        raise ValueError(f"sawtooth order must be at least 1, got {s}")
    first = AffineLayer(A=[[1.0], [1.0], [1.0]], b=[0.0, -0.5, -1.0])
    row = [2.0, -4.0, 2.0]
    middle = AffineLayer(A=[row, row, row], b=[0.0, -0.5, -1.0])
    last = AffineLayer(A=[row], b=[0.0])
    return ReluNetwork(layers=(first,) + (middle,) * (s - 1) + (last,))


def make_pwl_network(f: PwlFunction, scale: float = 1.0, shift: float = 0.0) -> ReluNetwork:
    """Two-layer network realizing ``scale * f(x) + shift`` exactly.

    With the defaults this is ``f`` itself and its connectivity is at most
    ``3 * len(f.a)``; zero coefficients do not count.
    """
    m = f.a.size
    first = AffineLayer(A=np.ones((m, 1)), b=-f.b)
    last = AffineLayer(A=(scale * f.a).reshape(1, m), b=[shift])
    return ReluNetwork(layers=(first, last))


def make_identity_network() -> ReluNetwork:
    """Two-layer identity ``rho(x) - rho(-x)``, exact on all of R."""
    first = AffineLayer(A=[[1.0], [-1.0]], b=[0.0, 0.0])
    last = AffineLayer(A=[[1.0, -1.0]], b=[0.0])
    return ReluNetwork(layers=(first, last))


def compose(outer: ReluNetwork, inner: ReluNetwork) -> ReluNetwork:
    """Network realizing ``outer(inner(x))`` exactly.

    The inner network's final affine layer is merged into the outer
    network's first one (matrix product, combined offsets), so the result
    has depth ``depth(outer) + depth(inner) - 1`` and no extra ReLU is
    inserted at the seam.
    """
    if outer.input_dim != inner.output_dim:
        raise ValueError(
            f"outer input dim {outer.input_dim} does not match inner output dim {inner.output_dim}"
        )
    seam_in = inner.layers[-1]
    seam_out = outer.layers[0]
    merged = AffineLayer(A=seam_out.A @ seam_in.A, b=seam_out.A @ seam_in.b + seam_out.b)
    return ReluNetwork(layers=inner.layers[:-1] + (merged,) + outer.layers[1:])


def extend_depth(net: ReluNetwork, target_depth: int) -> ReluNetwork:
    """Pad a network to a larger depth without changing its function.

    The final affine output ``y`` is split into the channel pair
    ``(rho(y), rho(-y))``, carried through identity layers, and recombined as
    ``rho(y) - rho(-y) = y``.  This is exact for every real input and adds
    two non-zeros per padded layer and channel plus the one-off cost of
    duplicating the final layer.
    """
    if target_depth < depth(net):
        raise ValueError(f"cannot shrink depth {depth(net)} to {target_depth}")
    if target_depth == depth(net):
        return net
    last = net.layers[-1]
    d = last.out_dim
    doubled = AffineLayer(A=np.vstack([last.A, -last.A]), b=np.concatenate([last.b, -last.b]))
    carry = AffineLayer(A=np.eye(2 * d), b=np.zeros(2 * d))
    recombine = np.zeros((d, 2 * d))
    recombine[np.arange(d), np.arange(d)] = 1.0
    recombine[np.arange(d), d + np.arange(d)] = -1.0
    final = AffineLayer(A=recombine, b=np.zeros(d))
    pad = target_depth - depth(net) - 1
    return ReluNetwork(layers=net.layers[:-1] + (doubled,) + (carry,) * pad + (final,))


def _stack_layers(nets: list[ReluNetwork], level: int) -> tuple[np.ndarray, np.ndarray]:
    blocks = [net.layers[level] for net in nets]
    if level == 0:
        A = np.vstack([blk.A for blk in blocks])
    else:
        rows = sum(blk.out_dim for blk in blocks)
        cols = sum(blk.in_dim for blk in blocks)
        A = np.zeros((rows, cols))
        r = c = 0
        for blk in blocks:
            A[r : r + blk.out_dim, c : c + blk.in_dim] = blk.A
            r += blk.out_dim
            c += blk.in_dim
    b = np.concatenate([blk.b for blk in blocks])
    return A, b


def _check_stackable(nets) -> list[ReluNetwork]:
    nets = list(nets)
    if not nets:
        raise ValueError("need at least one network")
    d0, L = nets[0].input_dim, depth(nets[0])
    for net in nets[1:]:
        if net.input_dim != d0 or depth(net) != L:
            raise ValueError("networks must share input dimension and depth to be stacked")
    return nets


def parallelize(nets) -> ReluNetwork:
    """Stack equally deep networks over a shared input.

    The first layers are stacked vertically and the rest block-diagonally,
    so the function is the concatenation of the component outputs and the
    connectivity is exactly the sum of the component connectivities.
    """
    nets = _check_stackable(nets)
    layers = [AffineLayer(*_stack_layers(nets, lv)) for lv in range(depth(nets[0]))]
    return ReluNetwork(layers=tuple(layers))


def sum_networks(nets) -> ReluNetwork:
    """Like `parallelize`, but the final layers are added instead of stacked."""
    nets = _check_stackable(nets)
    d_out = nets[0].output_dim
    for net in nets[1:]:
        if net.output_dim != d_out:
            raise ValueError("summed networks must share the output dimension")
    L = depth(nets[0])
    layers = [AffineLayer(*_stack_layers(nets, lv)) for lv in range(L - 1)]
    last = AffineLayer(
        A=np.hstack([net.layers[-1].A for net in nets]),
        b=np.sum([net.layers[-1].b for net in nets], axis=0),
    )
    return ReluNetwork(layers=tuple(layers) + (last,))


def network_to_dict(net: ReluNetwork, meta: dict | None = None) -> dict:
    """JSON-ready dict; float values round-trip bit-exactly through ``json``."""
    return {
        "layers": [{"A": layer.A.tolist(), "b": layer.b.tolist()} for layer in net.layers],
        "meta": dict(meta or {}),
    }


def network_from_dict(data: dict) -> tuple[ReluNetwork, dict]:
    layers = tuple(AffineLayer(A=item["A"], b=item["b"]) for item in data["layers"])
    return ReluNetwork(layers=layers), dict(data.get("meta", {}))


def save_network(net: ReluNetwork, path, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net, meta), fh, sort_keys=True)
        fh.write("\n")


def load_network(path) -> tuple[ReluNetwork, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))
