"""Command-line front end: compile, sample, verify, plot.

Reports are machine-readable JSON printed first, followed by a short human
summary.  Exit codes: 0 success, 1 verification failure, 2 usage/IO error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .histogram import BUILTIN_DENSITIES, DensitySpec, quantize_density, tv_distance
from .metrics import empirical_wasserstein
from .relunet import connectivity, depth, eval_network, load_network, save_network
from .sampler import NoiseSource, sample_histogram, sample_pushforward
from .transport import (
    alt_fine_deviation,
    build_map,
    check_cell_masses,
    claimed_depth,
    connectivity_bound,
    lower_to_network,
    max_forward_error,
    wasserstein_upper_bound,
)

__all__ = ["main"]


def _add_density_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--density", metavar="PATH", help="density spec JSON file")
    group.add_argument("--builtin", choices=BUILTIN_DENSITIES, help="named analytic density")
    p.add_argument("--alpha", type=float, default=0.5, help="cosine_bump amplitude in (0,1)")
    p.add_argument("--grid-m", type=int, default=240, help="builtin density grid resolution")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="histogram tiles per axis")
    p.add_argument("--s", type=int, required=True, help="sawtooth order")
    p.add_argument(
        "--method", choices=("standard", "alt", "linewise"), default="standard", help="construction"
    )


def _load_density(args) -> DensitySpec:
    if args.density:
        return DensitySpec.from_json(Path(args.density).read_text(encoding="utf-8"))
    params = {"alpha": args.alpha} if args.builtin == "cosine_bump" else {}
    return DensitySpec.from_builtin(args.builtin, m=args.grid_m, **params)


def _compile_pipeline(args):
    spec = _load_density(args)
    if spec.dim != 2:
        raise ValueError("network compilation needs a 2-D density (the maps go [0,1] -> [0,1]^2)")
    h = quantize_density(spec, args.n)
    tmap = build_map(h, args.s, args.method)
    return spec, h, tmap


def cmd_compile(args) -> int:
    spec, _h, tmap = _compile_pipeline(args)
    net = lower_to_network(tmap)
    meta = {
        "n": args.n,
        "s": args.s,
        "method": args.method,
        "claimed_connectivity_bound": connectivity_bound(args.n, args.s, args.method),
        "claimed_depth": claimed_depth(args.s, args.method),
    }
    save_network(net, args.out, meta)
    total_bound = spec.lipschitz * math.sqrt(2.0) / (2 * args.n) + wasserstein_upper_bound(
        args.n, args.s, args.method
    )
    report = {
        "connectivity": connectivity(net),
        "connectivity_bound": meta["claimed_connectivity_bound"],
        "depth": depth(net),
        "claimed_depth": meta["claimed_depth"],
        "wasserstein_bound": total_bound,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    print(f"wrote network to {args.out}")
    print(f"connectivity {report['connectivity']} (bound {report['connectivity_bound']}), depth {report['depth']}")
    print(f"wasserstein bound (quantization + transport): {total_bound:.6g}")
    return 0


def cmd_sample(args) -> int:
    net, _meta = load_network(args.net)
    points = sample_pushforward(NoiseSource(args.seed), net, args.count)
    header = "x,y" if points.ndim == 2 else "x"
    np.savetxt(args.out, points, fmt="%.17g", delimiter=",", header=header, comments="")
    print(f"wrote {args.count} samples to {args.out}")
    return 0


def cmd_verify(args) -> int:
    spec, h, tmap = _compile_pipeline(args)
    net, meta = load_network(args.net)
    for key, val in (("n", args.n), ("s", args.s), ("method", args.method)):
        if key in meta and meta[key] != val:
            raise ValueError(f"network meta {key}={meta[key]!r} does not match requested {val!r}")

    checks: dict[str, bool] = {}
    forward_err = max_forward_error(tmap, net)
    checks["forward_matches_map"] = forward_err <= 1e-9

    m_bound = connectivity_bound(args.n, args.s, args.method)
    m_count = connectivity(net)
    checks["connectivity_within_bound"] = m_count <= m_bound
    l_claim = claimed_depth(args.s, args.method)
    l_count = depth(net)
    checks["depth_matches"] = l_count == l_claim

    mass_err, cells = check_cell_masses(tmap)
    mass_tol = 1e-12 if args.method == "alt" else 1e-10
    checks["cell_masses_match"] = mass_err <= mass_tol

    tv = tv_distance(spec, h)
    tv_bound = spec.lipschitz * math.sqrt(spec.dim) / (2 * args.n)
    checks["tv_within_bound"] = tv <= tv_bound + 1e-12

    w_bound = wasserstein_upper_bound(args.n, args.s, args.method)
    hist_pts = sample_histogram(NoiseSource(args.seed), h, args.count)
    net_pts = np.clip(sample_pushforward(NoiseSource(args.seed + 1), net, args.count), 0.0, 1.0)
    w_emp = empirical_wasserstein(hist_pts, net_pts, m=2000, seed=args.seed)
    slack = 0.02
    checks["empirical_wasserstein_within_bound"] = w_emp <= w_bound + slack

    report = {
        "max_cell_mass_error": mass_err,
        "cells_checked": cells,
        "connectivity": m_count,
        "connectivity_bound": m_bound,
        "depth": l_count,
        "claimed_depth": l_claim,
        "wasserstein_bound": w_bound,
        "max_forward_error": forward_err,
        "tv_distance": tv,
        "tv_bound": tv_bound,
        "empirical_wasserstein": w_emp,
        "empirical_slack": slack,
    }
    if args.method == "alt":
        fine_dev = alt_fine_deviation(tmap)
        scale = float(np.max(h.weights)) / (args.n**2 * (1 + 2**args.s))
        report["alt_fine_deviation"] = fine_dev
        checks["alt_fine_deviation_in_scale"] = fine_dev <= 2.0 * scale
    report["checks"] = checks
    report["passed"] = all(checks.values())

    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    for name, ok in checks.items():
        print(f"check {name}: {'PASS' if ok else 'FAIL'}")
    print(f"verification {'PASSED' if report['passed'] else 'FAILED'}")
    return 0 if report["passed"] else 1


def _write_pgm(path, counts: np.ndarray) -> None:
    """Binary portable graymap of a bin-count matrix (x right, y up)."""
    image = counts.T[::-1]
    top = counts.max()
    gray = np.zeros(image.shape, dtype=np.uint8)
    if top > 0:
        gray = np.round(255.0 * image / top).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    raw = np.genfromtxt(args.samples, delimiter=",", names=True)
    if raw.dtype.names is None or "y" not in raw.dtype.names:
        raise ValueError(f"{args.samples} must be a CSV with an x,y header for heatmaps")
    pts = np.column_stack([raw["x"], raw["y"]])
    if pts.size == 0 or not np.all(np.isfinite(pts)):
        raise ValueError(f"{args.samples} contains no finite samples")
    counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=args.bins, range=[[0, 1], [0, 1]])

    base = Path(args.out).with_suffix("")
    pgm = base.with_suffix(".pgm")
    csv_path = base.with_suffix(".csv")
    png = base.with_suffix(".png")
    _write_pgm(pgm, counts)
    np.savetxt(csv_path, counts.T[::-1].astype(int), fmt="%d", delimiter=",")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.imshow(counts.T, origin="lower", extent=(0, 1, 0, 1), cmap="gray")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(png, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written = [str(pgm), str(csv_path), str(png)]

    if args.curve_net:
        net, _meta = load_network(args.curve_net)
        grid = np.linspace(0.0, 1.0, args.curve_points)
        out = eval_network(net, grid)
        second = out[:, 1] if out.ndim == 2 else out
        curve_csv = base.parent / (base.name + "_curve.csv")
        curve_png = base.parent / (base.name + "_curve.png")
        np.savetxt(
            curve_csv,
            np.column_stack([grid, second]),
            fmt="%.17g",
            delimiter=",",
            header="x,y",
            comments="",
        )
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.plot(grid, second, linewidth=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("second component")
        fig.savefig(curve_png, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written += [str(curve_csv), str(curve_png)]

    print("wrote " + ", ".join(written))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relugen",
        description="Compile histogram targets into generative ReLU networks and verify them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="build a network from a density and write it as JSON")
    _add_density_args(p)
    _add_run_args(p)
    p.add_argument("--out", required=True, help="output network JSON path")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("sample", help="push seeded uniform noise through a compiled network")
    p.add_argument("--net", required=True, help="network JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="re-derive the construction and check every claim")
    _add_density_args(p)
    _add_run_args(p)
    p.add_argument("--net", required=True, help="network JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20_000, help="samples per side for empirical W")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="render sample files to graymap/CSV/PNG")
    p.add_argument("--samples", required=True, help="samples CSV path")
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--out", required=True, help="output base path (suffix is replaced)")
    p.add_argument("--curve-net", help="also plot x vs the second component of this network")
    p.add_argument("--curve-points", type=int, default=2049)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
