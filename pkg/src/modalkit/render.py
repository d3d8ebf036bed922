"""Deterministic SVG renderers for the diagnostic result types.

Fixed 800x600 canvas, fixed palette (increasing blue, decreasing red,
inconclusive purple, sparse gray), coordinates printed with three
decimals: identical inputs yield byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .errors import ModalkitError
from .regression import ModalCurveSet
from .scale_space import DECREASING, INCREASING, SPARSE, ModeTree, SizerMap
from .simulate import RateReport
from .topology import PersistencePair

__all__ = ["render_plot"]

W, H = 800, 600
MARGIN = 60
PALETTE = {INCREASING: "blue", DECREASING: "red", SPARSE: "gray"}
INCONCLUSIVE_COLOR = "purple"
SERIES = ["#1b6ca8", "#c23b22", "#2e8540", "#8031a7", "#b8860b", "#555555"]


def _f(v) -> str:
    return f"{float(v):.3f}"


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W // 2}" y="24" text-anchor="middle" font-size="16" '
            f'font-family="sans-serif">{title}</text>',
        ]

    def rect(self, x, y, w, h, color):
        self.parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
            f'fill="{color}"/>'
        )

    def circle(self, x, y, r, color):
        self.parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{r}" fill="{color}"/>')

    def line(self, x1, y1, x2, y2, color, width=1):
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{color}" stroke-width="{width}"/>'
        )

    def polyline(self, xs, ys, color, width=2):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>'
        )

    def finish(self) -> str:
        return "\n".join(self.parts) + "\n</svg>\n"


def _scaler(lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0

    def to(v):
        return out_lo + (v - lo) / span * (out_hi - out_lo)

    return to


def _render_sizer(m: SizerMap) -> str:
    c = _Canvas("derivative significance map")
    nx, nh = m.x_grid.shape[0], m.h_grid.shape[0]
    cw = (W - 2 * MARGIN) / nx
    ch = (H - 2 * MARGIN) / nh
    for j in range(nh):
        for i in range(nx):
            color = PALETTE.get(int(m.states[i, j]), INCONCLUSIVE_COLOR)
            # largest bandwidth on top
            c.rect(MARGIN + i * cw, MARGIN + j * ch, cw + 0.5, ch + 0.5, color)
    return c.finish()


def _render_pairs(pairs) -> str:
    c = _Canvas("persistence diagram")
    births = [p.birth for p in pairs]
    hi = max(births) if births else 1.0
    to = _scaler(0.0, hi * 1.05 if hi > 0 else 1.0, MARGIN, W - MARGIN)
    toy = _scaler(0.0, hi * 1.05 if hi > 0 else 1.0, H - MARGIN, MARGIN)
    c.line(to(0), toy(0), to(hi * 1.05), toy(hi * 1.05), "black")
    for p in sorted(pairs, key=lambda q: (q.death, q.birth, q.mode_node)):
        c.circle(to(p.death), toy(p.birth), 4, SERIES[0])
    return c.finish()


def _render_mode_tree(t: ModeTree) -> str:
    c = _Canvas("mode tree")
    all_locs = np.concatenate([loc for loc in t.locations if loc.size]) if t.locations else np.array([0.0])
    to = _scaler(float(all_locs.min()), float(all_locs.max()), MARGIN, W - MARGIN)
    logh = np.log(t.bandwidths)
    toy = _scaler(float(logh.min()), float(logh.max()), H - MARGIN, MARGIN)
    for j in range(1, len(t.locations)):
        for m, loc in enumerate(t.locations[j]):
            pm = t.links[j][m]
            c.line(
                to(t.locations[j - 1][pm]), toy(logh[j - 1]),
                to(loc), toy(logh[j]),
                SERIES[0],
            )
    for j, locs in enumerate(t.locations):
        for loc in locs:
            c.circle(to(loc), toy(logh[j]), 2, "black")
    return c.finish()


def _render_curves(cs: ModalCurveSet) -> str:
    c = _Canvas("modal and mean regression")
    ys = np.concatenate(
        [b.ys for b in cs.branches]
        + [cs.mean_curve[np.isfinite(cs.mean_curve)]]
    )
    if ys.size == 0:
        ys = np.array([0.0, 1.0])
    to = _scaler(float(cs.x_grid.min()), float(cs.x_grid.max()), MARGIN, W - MARGIN)
    toy = _scaler(float(ys.min()), float(ys.max()), H - MARGIN, MARGIN)
    for k, b in enumerate(cs.branches):
        c.polyline([to(x) for x in b.xs], [toy(y) for y in b.ys],
                   SERIES[k % len(SERIES)])
    finite = np.isfinite(cs.mean_curve)
    if finite.any():
        c.polyline(
            [to(x) for x in cs.x_grid[finite]],
            [toy(y) for y in cs.mean_curve[finite]],
            "black", width=1,
        )
    return c.finish()


def _render_rate(r: RateReport) -> str:
    c = _Canvas(f"log-log RMSE, {r.method} on {r.preset_name}")
    lx = np.log(r.n_grid.astype(float))
    ly = np.log(r.rmse)
    to = _scaler(float(lx.min()), float(lx.max()), MARGIN, W - MARGIN)
    toy = _scaler(float(ly.min()), float(ly.max()), H - MARGIN, MARGIN)
    fit = r.intercept + r.slope * lx
    c.polyline([to(x) for x in lx], [toy(y) for y in fit], SERIES[1])
    for x, y in zip(lx, ly):
        c.circle(to(x), toy(y), 4, SERIES[0])
    return c.finish()


def render_plot(result, format: str = "svg") -> str:
    """Render one result object to SVG markup."""
    if format != "svg":
        raise ModalkitError(f"unsupported output format {format!r}")
    if isinstance(result, SizerMap):
        return _render_sizer(result)
    if isinstance(result, ModeTree):
        return _render_mode_tree(result)
    if isinstance(result, ModalCurveSet):
        return _render_curves(result)
    if isinstance(result, RateReport):
        return _render_rate(result)
    if isinstance(result, (list, tuple)) and result and isinstance(result[0], PersistencePair):
        return _render_pairs(result)
    raise ModalkitError(f"no renderer for {type(result).__name__}")
