"""Command-line interface.

Subcommands: mode, tree, persist, sizer, cluster, modalreg, simulate.
Exit codes: 0 success, 1 usage error, 2 data error.  Results print as
JSON on stdout; with --out they are written atomically into the given
directory (plus SVG/CSV side outputs where applicable).  The environment
variable MODAL_THREADS caps worker parallelism and MODAL_NUMBA=0 forces
the pure-numpy kernels.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .clustering import gmm_modal_partition, modal_partition, parametric_partition
from .data import PRESET_NAMES, Sample, SeedSpec, load_csv, preset
from .density import KernelDensityModel, KernelSpec, NearestNeighborModel, normal_reference_bandwidth
from .direct import (
    chernoff_mode,
    dalenius_venter_mode,
    grenander_mode,
    robertson_cryer_mode,
)
from .errors import ModalkitError
from .grids import EvalGrid
from .mixtures import select_gmm_bic
from .modes import kernel_mode, sample_point_mode
from .regression import ConditionalModel, modal_regression_curves
from .render import render_plot
from .scale_space import default_bandwidth_sweep, mode_tree, sizer_map
from .serialize import dumps, write_json_atomic, write_text_atomic
from .simulate import simulate_rate
from .topology import level_set_tree

MODE_METHODS = ("chernoff", "dv", "hsm", "grenander", "kernel", "sample-point", "nn")
CLUSTER_METHODS = ("modal", "parametric", "gmm-modal")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_columns(raw):
    if raw is None:
        return None
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    return [int(p) if p.lstrip("-").isdigit() else p for p in parts]


def _parse_floats(raw):
    return [float(p) for p in raw.split(",") if p.strip()]


def _parse_ints(raw):
    return [int(p) for p in raw.split(",") if p.strip()]


def _load(args, want_dim=None) -> Sample:
    s = load_csv(args.input, _parse_columns(args.columns))
    if want_dim is not None and s.dim != want_dim:
        raise ModalkitError(
            f"{args.input}: expected {want_dim} column(s), got {s.dim}"
        )
    return s


def _emit(args, name: str, payload, svg: str | None = None, csv_text: str | None = None):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_json_atomic(os.path.join(args.out, f"{name}.json"), payload)
        if svg is not None and args.format == "svg":
            write_text_atomic(os.path.join(args.out, f"{name}.svg"), svg)
        if csv_text is not None:
            write_text_atomic(os.path.join(args.out, f"{name}.csv"), csv_text)
    else:
        sys.stdout.write(dumps(payload))


def _bandwidths_or_default(args, s: Sample):
    if args.bandwidth:
        return np.asarray(_parse_floats(args.bandwidth))
    return normal_reference_bandwidth(s)


def _cmd_mode(args):
    s = _load(args)
    method = args.method or "hsm"
    if method in ("chernoff", "dv", "hsm", "grenander") and s.dim != 1:
        raise ModalkitError(f"method {method} requires univariate input")
    if method == "chernoff":
        if args.a is None:
            raise ModalkitError("--a is required for the chernoff method")
        est = chernoff_mode(s, args.a)
    elif method == "dv":
        if args.k is None:
            raise ModalkitError("--k is required for the dv method")
        est = dalenius_venter_mode(s, args.k)
    elif method == "hsm":
        est = robertson_cryer_mode(s, args.p if args.p is not None else 0.5)
    elif method == "grenander":
        if args.k is None or args.p is None:
            raise ModalkitError("--k and --p are required for the grenander method")
        est = grenander_mode(s, args.k, args.p)
    elif method == "kernel":
        model = KernelDensityModel(s, bandwidth=_bandwidths_or_default(args, s))
        est = kernel_mode(model, grid=args.grid)
    elif method == "sample-point":
        model = KernelDensityModel(s, bandwidth=_bandwidths_or_default(args, s))
        est = sample_point_mode(model)
    elif method == "nn":
        if args.k is None:
            raise ModalkitError("--k is required for the nn method")
        est = sample_point_mode(NearestNeighborModel(s, args.k))
    else:
        raise ModalkitError(f"unknown mode method {method!r}")
    _emit(args, "mode", est)
    return 0


def _cmd_tree(args):
    s = _load(args, want_dim=1)
    if args.bandwidth:
        hs = np.asarray(_parse_floats(args.bandwidth))
        if hs.shape[0] == 1:
            hs = np.geomspace(hs[0], hs[0] / 16.0, 15)
    else:
        hs = default_bandwidth_sweep(s)
    tree = mode_tree(s, hs, resolution=args.grid or 512)
    _emit(args, "tree", tree, svg=render_plot(tree))
    return 0


def _cmd_persist(args):
    s = _load(args)
    h = _bandwidths_or_default(args, s)
    model = KernelDensityModel(s, bandwidth=h)
    resolution = args.grid or (512 if s.dim == 1 else 64)
    grid = EvalGrid.for_model(model, resolution=resolution)
    tree = level_set_tree(grid)
    payload = {
        "minLevel": tree.min_level,
        "nodes": [
            {
                "id": n.id,
                "birth": n.birth,
                "mergeLevel": n.merge_level,
                "parent": n.parent,
                "children": list(n.children),
                "isLeaf": n.is_leaf,
                "modeLocation": None if n.location is None else n.location.tolist(),
            }
            for n in tree.nodes
        ],
        "root": tree.root,
        "pairs": [
            {
                "death": p.death,
                "birth": p.birth,
                "modeLocation": p.mode_location.tolist(),
            }
            for p in tree.pairs
        ],
    }
    _emit(args, "persist", payload, svg=render_plot(list(tree.pairs)))
    return 0


def _cmd_sizer(args):
    s = _load(args, want_dim=1)
    h_ref = float(normal_reference_bandwidth(s)[0])
    if args.bandwidth:
        vals = _parse_floats(args.bandwidth)
        h_lo, h_hi = (vals[0], vals[-1]) if len(vals) > 1 else (vals[0] / 8, vals[0] * 4)
    else:
        h_lo, h_hi = h_ref / 8.0, h_ref * 4.0
    h_grid = np.geomspace(h_hi, h_lo, 21)
    nx = args.grid or 128
    data = s.column(0)
    x_grid = np.linspace(data.min(), data.max(), nx)
    m = sizer_map(s, x_grid, h_grid)
    _emit(args, "sizer", m, svg=render_plot(m))
    return 0


def _cmd_cluster(args):
    s = _load(args)
    method = args.method or "modal"
    seed = SeedSpec(args.seed or 0)
    if method == "modal":
        model = KernelDensityModel(s, bandwidth=_bandwidths_or_default(args, s))
        part = modal_partition(model, s)
    else:
        gmm = select_gmm_bic(s, args.k or 6, seed)
        if method == "parametric":
            part = parametric_partition(gmm, s)
        elif method == "gmm-modal":
            part = gmm_modal_partition(gmm, s)
        else:
            raise ModalkitError(f"unknown cluster method {method!r}")
    lines = ["label," + ",".join(f"x{j}" for j in range(s.dim))]
    for lbl, row in zip(part.labels, s.points):
        lines.append(f"{int(lbl)}," + ",".join(repr(float(v)) for v in row))
    _emit(args, "cluster", part, csv_text="\n".join(lines) + "\n")
    return 0


def _cmd_modalreg(args):
    s = _load(args)
    if s.dim != 2:
        raise ModalkitError("modalreg needs exactly two columns (x, y)")
    if args.bandwidth:
        vals = _parse_floats(args.bandwidth)
        h_x, h_y = (vals[0], vals[-1]) if len(vals) > 1 else (vals[0], vals[0])
    else:
        ref = normal_reference_bandwidth(s)
        h_x, h_y = float(ref[0]), float(ref[1])
    model = ConditionalModel(s, h_x=h_x, h_y=h_y)
    nx = args.grid or 40
    xs = s.points[:, 0]
    x_grid = np.linspace(xs.min(), xs.max(), nx)
    curves = modal_regression_curves(model, x_grid)
    lines = ["x,branchId,y,density"]
    for b in curves.branches:
        for x, y, d in zip(b.xs, b.ys, b.densities):
            lines.append(f"{repr(float(x))},{b.id},{repr(float(y))},{repr(float(d))}")
    _emit(args, "modalreg", curves, svg=render_plot(curves),
          csv_text="\n".join(lines) + "\n")
    return 0


def _cmd_simulate(args):
    name = args.input or "gauss"
    if name not in PRESET_NAMES:
        raise ModalkitError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    spec = preset(name)
    n_grid = _parse_ints(args.grid) if args.grid else [1000, 2000, 4000]
    c = _first_float(args.bandwidth)
    report = simulate_rate(
        args.method or "kernel",
        spec,
        n_grid,
        replicates=args.k or 200,
        seed=SeedSpec(args.seed or 0),
        c=c if c is not None else 1.0,
    )
    _emit(args, "simulate", report, svg=render_plot(report))
    return 0


def _first_float(raw):
    if not raw:
        return None
    return _parse_floats(raw)[0]


def _add_common(p, *, grid_int=True):
    p.add_argument("--input", help="input CSV path (simulate: preset name)")
    p.add_argument("--columns", help="comma-separated column indices or names")
    p.add_argument("--method", help="method name for this subcommand")
    p.add_argument("--bandwidth", help="bandwidth(s), comma separated")
    p.add_argument("--k", type=int, help="count parameter (method dependent)")
    p.add_argument("--p", type=float, help="proportion or power parameter")
    p.add_argument("--a", type=float, help="interval half-width (chernoff)")
    if grid_int:
        p.add_argument("--grid", type=int, help="grid resolution")
    else:
        p.add_argument("--grid", help="comma-separated sample sizes")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", help="output directory (default: JSON to stdout)")
    p.add_argument("--format", default="svg", choices=["svg"], help="figure format")


def build_parser() -> _Parser:
    parser = _Parser(prog="modalkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, grid_int in [
        ("mode", _cmd_mode, True),
        ("tree", _cmd_tree, True),
        ("persist", _cmd_persist, True),
        ("sizer", _cmd_sizer, True),
        ("cluster", _cmd_cluster, True),
        ("modalreg", _cmd_modalreg, True),
        ("simulate", _cmd_simulate, False),
    ]:
        p = sub.add_parser(name, add_help=True)
        _add_common(p, grid_int=grid_int)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "simulate" and not args.input:
        parser.error(f"{args.command}: --input is required")
    try:
        return args.func(args)
    except ModalkitError as exc:
        print(f"modalkit: data error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"modalkit: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
