"""Rectangular evaluation grids for density sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EvalGrid"]

MIN_RESOLUTION = 16


@dataclass(frozen=True)
class EvalGrid:
    """Axis-aligned grid with optional per-node density levels.

    ``axes`` holds one strictly increasing coordinate array per dimension;
    ``levels`` (when present) has shape ``tuple(len(a) for a in axes)`` and
    stores the density value at each node, C-ordered so that flat index
    ``i`` corresponds to ``np.unravel_index(i, shape)``.
    """

    axes: tuple
    levels: np.ndarray | None = None

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        for a in axes:
            if a.ndim != 1 or a.shape[0] < MIN_RESOLUTION:
                raise ValueError(f"each axis needs >= {MIN_RESOLUTION} nodes")
            if np.any(np.diff(a) <= 0):
                raise ValueError("axes must be strictly increasing")
        object.__setattr__(self, "axes", axes)
        if self.levels is not None:
            lv = np.asarray(self.levels, dtype=float)
            if lv.shape != self.shape:
                raise ValueError(f"levels shape {lv.shape} != grid shape {self.shape}")
            if not np.all(np.isfinite(lv)):
                raise ValueError("levels must be finite")
            lv.setflags(write=False)
            object.__setattr__(self, "levels", lv)

    @classmethod
    def regular(cls, lo, hi, resolution) -> "EvalGrid":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        res = np.broadcast_to(np.asarray(resolution, dtype=int), lo.shape)
        axes = tuple(np.linspace(a, b, r) for a, b, r in zip(lo, hi, res))
        return cls(axes=axes)

    @classmethod
    def for_model(cls, model, resolution=None, margin: float = 3.0) -> "EvalGrid":
        """Grid over the model's window (data range plus ``margin`` smoothing
        lengths), evaluated on construction."""
        lo, hi = model.grid_window(margin)
        if resolution is None:
            resolution = 512 if len(np.atleast_1d(lo)) == 1 else 64
        return cls.regular(lo, hi, resolution).evaluate(model)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.shape[0] for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (size, dim), C-order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def node_coord(self, flat_index: int) -> np.ndarray:
        idx = np.unravel_index(flat_index, self.shape)
        return np.array([a[i] for a, i in zip(self.axes, idx)])

    def evaluate(self, model) -> "EvalGrid":
        vals = np.asarray(model.pdf(self.nodes()), dtype=float).reshape(self.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("model produced non-finite density on the grid")
        return EvalGrid(axes=self.axes, levels=vals)

    def with_levels(self, levels) -> "EvalGrid":
        return EvalGrid(axes=self.axes, levels=np.asarray(levels, dtype=float))
