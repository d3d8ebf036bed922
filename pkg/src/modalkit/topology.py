"""Superlevel-set topology of a gridded density.

Sweeping the level from the highest grid value downward, connected
components of ``{levels >= c}`` are born at local maxima and merge at
saddles; on a merge the younger component dies (elder rule, ties broken
by node index).  The sweep yields the cluster tree, the persistence
pairs, and the grid mode count in one pass.  Grid connectivity is the
orthogonal-neighbor graph (2 neighbors in 1-d, 4-connectivity in 2-d,
2d-connectivity beyond).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import EvalGrid

__all__ = [
    "GridModes",
    "count_modes",
    "ClusterTreeNode",
    "ClusterTree",
    "level_set_tree",
    "PersistencePair",
    "persistence_diagram",
]


def _neighbor_offsets(shape):
    """Flat-index offsets of orthogonal neighbors plus validity helpers."""
    dims = len(shape)
    strides = np.ones(dims, dtype=int)
    for k in range(dims - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    return strides


def _iter_neighbors(flat, idx, shape, strides):
    for k in range(len(shape)):
        if idx[k] > 0:
            yield flat - strides[k]
        if idx[k] < shape[k] - 1:
            yield flat + strides[k]


@dataclass(frozen=True)
class GridModes:
    """Local maxima of grid levels (one entry per maximal plateau)."""

    locations: np.ndarray          # (count, dim), refined where possible
    grid_locations: np.ndarray     # (count, dim), plateau centers on the grid
    node_indices: tuple            # representative (lowest) flat index per mode
    boundary: np.ndarray           # (count,) plateau touches the grid edge
    too_coarse: bool               # two detected modes occupy adjacent nodes

    @property
    def count(self) -> int:
        return self.locations.shape[0]


def _strict_maxima_fast(grid: EvalGrid):
    """Vectorized detection for the common tie-free case."""
    lv = grid.levels
    higher = np.zeros(lv.shape, dtype=bool)
    has_tie = False
    for ax in range(lv.ndim):
        lo = [slice(None)] * lv.ndim
        hi = [slice(None)] * lv.ndim
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        a, b = lv[tuple(lo)], lv[tuple(hi)]
        if np.any(a == b):
            has_tie = True
            break
        higher[tuple(lo)] |= b > a
        higher[tuple(hi)] |= a > b
    if has_tie:
        return None
    flat = np.flatnonzero(~higher.ravel())
    plateaus = [np.array([v]) for v in flat]
    coords = np.stack(np.unravel_index(flat, lv.shape), axis=1)
    boundary = np.zeros(flat.shape[0], dtype=bool)
    for k, s in enumerate(lv.shape):
        boundary |= (coords[:, k] == 0) | (coords[:, k] == s - 1)
    too_coarse = False
    for i in range(flat.shape[0]):
        cheb = np.abs(coords - coords[i]).max(axis=1)
        if np.any((cheb == 1)):
            too_coarse = True
            break
    return plateaus, boundary, too_coarse


def _plateau_maxima(grid: EvalGrid):
    """Connected equal-level plateaus whose outer neighbors are all lower.

    Returns (plateaus, boundary_flags, too_coarse); each plateau is the
    sorted array of its member flat indices.
    """
    fast = _strict_maxima_fast(grid)
    if fast is not None:
        return fast

    levels = grid.levels.ravel()
    shape = grid.shape
    strides = _neighbor_offsets(shape)
    n = levels.shape[0]
    visited = np.zeros(n, dtype=bool)
    plateaus = []
    boundary_flags = []
    plateau_id = np.full(n, -1, dtype=int)

    for start in range(n):
        if visited[start]:
            continue
        val = levels[start]
        stack = [start]
        visited[start] = True
        members = []
        is_max = True
        touches_edge = False
        while stack:
            v = stack.pop()
            members.append(v)
            idx = np.unravel_index(v, shape)
            if any(i == 0 or i == shape[k] - 1 for k, i in enumerate(idx)):
                touches_edge = True
            for nb in _iter_neighbors(v, idx, shape, strides):
                if levels[nb] > val:
                    is_max = False
                elif levels[nb] == val and not visited[nb]:
                    visited[nb] = True
                    stack.append(nb)
        if is_max:
            members = np.sort(np.asarray(members))
            for m in members:
                plateau_id[m] = len(plateaus)
            plateaus.append(members)
            boundary_flags.append(touches_edge)

    # adjacency (Chebyshev distance 1) between two distinct mode plateaus
    too_coarse = False
    dims = len(shape)
    for pid, members in enumerate(plateaus):
        for v in members:
            idx = np.array(np.unravel_index(v, shape))
            for delta in np.ndindex(*(3,) * dims):
                off = np.array(delta) - 1
                if not off.any():
                    continue
                nb_idx = idx + off
                if np.any(nb_idx < 0) or np.any(nb_idx >= shape):
                    continue
                nb = int(np.ravel_multi_index(nb_idx, shape))
                if plateau_id[nb] >= 0 and plateau_id[nb] != pid:
                    too_coarse = True
        if too_coarse:
            break
    return plateaus, np.asarray(boundary_flags, dtype=bool), too_coarse


def count_modes(model, grid: EvalGrid, refine: bool = True) -> GridModes:
    """Detect grid local maxima and, when the model has a gradient,
    refine each location by ascent to the nearby stationary point."""
    if grid.levels is None:
        if model is None:
            raise ValueError("grid has no levels and no model was given")
        grid = grid.evaluate(model)
    plateaus, boundary, too_coarse = _plateau_maxima(grid)
    centers = np.array(
        [np.mean([grid.node_coord(v) for v in members], axis=0) for members in plateaus]
    ).reshape(len(plateaus), grid.dim)

    locations = centers.copy()
    if refine and model is not None and hasattr(model, "gradient"):
        from .clustering import ascent_path
        from .errors import UnsupportedKernelError

        try:
            for i in range(centers.shape[0]):
                path = ascent_path(model, centers[i])
                if path.converged and not path.saddle:
                    locations[i] = path.terminal
        except UnsupportedKernelError:
            locations = centers.copy()

    return GridModes(
        locations=locations,
        grid_locations=centers,
        node_indices=tuple(int(m[0]) for m in plateaus),
        boundary=boundary,
        too_coarse=too_coarse,
    )


@dataclass
class ClusterTreeNode:
    """One component segment of the superlevel-set dendrogram."""

    id: int
    birth: float                    # level at which the segment appears
    merge_level: float = None       # level at which it fuses into its parent
    parent: int = None
    children: list = field(default_factory=list)
    mode_node: int = None           # leaves: flat grid index of the mode
    location: np.ndarray = None     # leaves: coordinates of the mode node

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class PersistencePair:
    """Death/birth levels of one mode component under the elder rule."""

    death: float
    birth: float
    mode_location: np.ndarray
    mode_node: int

    @property
    def persistence(self) -> float:
        return self.birth - self.death

    def as_tuple(self):
        return (float(self.death), float(self.birth), int(self.mode_node))


@dataclass(frozen=True)
class ClusterTree:
    nodes: tuple
    root: int
    pairs: tuple
    min_level: float

    @property
    def leaves(self) -> tuple:
        return tuple(n for n in self.nodes if n.is_leaf)


def level_set_tree(grid: EvalGrid) -> ClusterTree:
    """Single descending union-find sweep over the grid levels."""
    if grid.levels is None:
        raise ValueError("grid must carry levels; call evaluate() first")
    levels = grid.levels.ravel()
    shape = grid.shape
    strides = _neighbor_offsets(shape)
    n = levels.shape[0]
    order = np.lexsort((np.arange(n), -levels))
    rank_of = np.empty(n, dtype=int)
    rank_of[order] = np.arange(n)

    parent = np.full(n, -1, dtype=int)          # union-find forest
    comp_birth_rank = {}                        # root -> processing rank at birth
    comp_birth_node = {}
    comp_tree_node = {}
    processed = np.zeros(n, dtype=bool)

    nodes: list[ClusterTreeNode] = []
    pairs: list[PersistencePair] = []

    def find(v):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    for v in order:
        idx = np.unravel_index(v, shape)
        roots = []
        for nb in _iter_neighbors(int(v), idx, shape, strides):
            if processed[nb]:
                r = find(nb)
                if r not in roots:
                    roots.append(r)
        parent[v] = v
        processed[v] = True
        if not roots:
            node = ClusterTreeNode(
                id=len(nodes),
                birth=float(levels[v]),
                mode_node=int(v),
                location=grid.node_coord(int(v)),
            )
            nodes.append(node)
            comp_birth_rank[v] = rank_of[v]
            comp_birth_node[v] = int(v)
            comp_tree_node[v] = node.id
            continue

        winner = min(roots, key=lambda r: comp_birth_rank[r])
        level_v = float(levels[v])
        real_losers = []
        for r in roots:
            if r is winner:
                continue
            birth_level = float(levels[comp_birth_node[r]])
            if birth_level == level_v:
                # same-level plateau extension: never a separate mode
                node_id = comp_tree_node[r]
                nodes[node_id] = None
            else:
                pairs.append(
                    PersistencePair(
                        death=level_v,
                        birth=birth_level,
                        mode_location=grid.node_coord(comp_birth_node[r]),
                        mode_node=comp_birth_node[r],
                    )
                )
                real_losers.append(r)

        if real_losers:
            merged = ClusterTreeNode(id=len(nodes), birth=level_v)
            nodes.append(merged)
            for r in [winner] + real_losers:
                child_id = comp_tree_node[r]
                nodes[child_id].merge_level = level_v
                nodes[child_id].parent = merged.id
                merged.children.append(child_id)
            comp_tree_node[winner] = merged.id

        # union all roots and the new node under the winner
        for r in roots:
            if r is not winner:
                parent[r] = winner
                comp_birth_rank.pop(r, None)
        parent[v] = winner

    root = find(int(order[0]))
    min_level = float(levels.min())
    root_node_id = comp_tree_node[root]
    nodes[root_node_id].merge_level = min_level
    pairs.append(
        PersistencePair(
            death=min_level,
            birth=float(levels[comp_birth_node[root]]),
            mode_location=grid.node_coord(comp_birth_node[root]),
            mode_node=comp_birth_node[root],
        )
    )

    # compact out pruned nodes, remapping ids
    keep = [nd for nd in nodes if nd is not None]
    remap = {nd.id: i for i, nd in enumerate(keep)}
    for i, nd in enumerate(keep):
        nd.id = i
        nd.parent = remap[nd.parent] if nd.parent is not None else None
        nd.children = [remap[c] for c in nd.children]
    pairs.sort(key=lambda p: (-p.birth, p.mode_node))
    return ClusterTree(
        nodes=tuple(keep),
        root=remap[root_node_id],
        pairs=tuple(pairs),
        min_level=min_level,
    )


def persistence_diagram(grid: EvalGrid) -> tuple:
    """Death/birth pairs of every grid mode, via :func:`level_set_tree`."""
    return level_set_tree(grid).pairs
