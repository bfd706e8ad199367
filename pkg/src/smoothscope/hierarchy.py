"""Nested point hierarchies ``X_1 ⊂ X_2 ⊂ ... ⊂ X_M`` around a center.

Two constructions are provided:

* :func:`fixed_stencils` builds tensor grids on ``[c - r, c + r]^d`` by
  repeated midpoint insertion (3, 5, 9, 17, ... nodes per edge).  It needs
  a function that can be evaluated anywhere.
* :func:`uniform_subsample` picks representatives from a given cloud, one
  per nonempty dyadic cell of the unit cube at each scale, and takes the
  cumulative union over scales.  It only needs sampled data.

Each hierarchy carries a per-level fill-distance proxy that decays by a
factor of two per level.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import BoundingBox, GeometryError, PointSet, bounding_box, fill_distance, rescale_to_unit_cube

__all__ = [
    "Hierarchy",
    "HierarchyError",
    "edge_counts",
    "fixed_stencils",
    "uniform_subsample",
]


class HierarchyError(ValueError):
    """A hierarchy cannot be built from the given input."""


@dataclass(frozen=True)
class Hierarchy:
    """Nested index sets into ``master``, coarsest first.

    ``levels[m - 1]`` holds the indices of ``X_m``; the finest level need not
    cover all of ``master`` (subsampling keeps only representatives).
    """

    master: PointSet
    levels: tuple[np.ndarray, ...]
    h_proxy: np.ndarray
    method: str

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level_points(self, m: int) -> PointSet:
        """The point set ``X_m`` for ``m = 1 .. n_levels``."""
        return self.master.subset(self.levels[m - 1])

    def sizes(self) -> list[int]:
        return [len(lv) for lv in self.levels]

    def is_nested(self) -> bool:
        return all(
            np.all(np.isin(self.levels[i], self.levels[i + 1])) for i in range(self.n_levels - 1)
        )


def edge_counts(M: int) -> list[int]:
    """Nodes per edge for levels 1..M: 3, 5, 9, 17, ..."""
    return [2**m + 1 for m in range(1, M + 1)]


def fixed_stencils(center, radius: float, dim: int, M: int, domain: BoundingBox | None = None) -> Hierarchy:
    """Nested tensor-grid stencils on ``[center - radius, center + radius]^dim``.

    Nodes outside ``domain`` are dropped from every level.  The proxy for
    level ``m`` is the grid spacing ``2 radius / (E_m - 1)``.
    """
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (dim,):
        raise HierarchyError(f"center must have {dim} coordinates")
    if not radius > 0:
        raise HierarchyError("radius must be positive")
    if M < 3:
        raise HierarchyError("at least three levels are required")
    if domain is not None and domain.dim != dim:
        raise HierarchyError("domain dimension does not match")

    edges = edge_counts(M)
    fine_edge = edges[-1]
    half = (fine_edge - 1) // 2
    step = radius / half
    # Integer offsets keep the center node exactly at the center.
    ticks = np.arange(-half, half + 1)
    axis_nodes = [c[k] + ticks * step for k in range(dim)]

    grid_idx = np.array(list(itertools.product(range(fine_edge), repeat=dim)), dtype=np.intp)
    coords = np.column_stack([axis_nodes[k][grid_idx[:, k]] for k in range(dim)])
    keep = np.ones(len(coords), dtype=bool) if domain is None else domain.contains(coords)
    kept_idx = grid_idx[keep]
    master = PointSet(coords[keep], check=False)

    levels = []
    for m, edge in enumerate(edges, start=1):
        stride = 2 ** (M - m)
        on_level = np.all(kept_idx % stride == 0, axis=1)
        idx = np.flatnonzero(on_level)
        if len(idx) < 2:
            raise HierarchyError(f"clipping leaves {len(idx)} point(s) at level {m}")
        levels.append(idx)
    h_proxy = np.array([2.0 * radius / (e - 1) for e in edges])
    return Hierarchy(master, tuple(levels), h_proxy, "stencil")


def _cell_representatives(u: np.ndarray, m: int) -> np.ndarray:
    """Index of the point nearest each nonempty cell's midpoint at scale ``m``."""
    n_cells = 2**m
    cell = np.minimum(np.floor(u * n_cells).astype(np.int64), n_cells - 1)
    mid = (cell + 0.5) / n_cells
    dist = np.sqrt(np.sum((u - mid) ** 2, axis=1))
    flat = np.ravel_multi_index(cell.T, (n_cells,) * u.shape[1]) if u.shape[1] > 1 else cell[:, 0]
    order = np.lexsort((np.arange(len(u)), dist, flat))
    first = np.ones(len(order), dtype=bool)
    first[1:] = flat[order][1:] != flat[order][:-1]
    return order[first]


def uniform_subsample(
    neighbors: PointSet, M: int, *, measured_h: bool = False, box: BoundingBox | None = None
) -> Hierarchy:
    """Top-down dyadic subsampling of ``neighbors`` into ``M`` nested levels.

    At scale ``m = 0 .. M-1`` the unit cube (after affine rescaling) is cut
    into ``2^(m d)`` cells, half-open except along the upper faces, and the
    point closest to each nonempty cell's midpoint is selected (lowest index
    on ties).  Level ``m + 1`` is the union of selections at scales ``<= m``.

    The cube is the bounding box of ``neighbors`` unless a reference ``box``
    is supplied (points outside it are clamped onto its faces).

    The proxy ``h_proxy[m] = 2^-m * diam / 2`` uses the bounding-box diameter
    of the neighbours; with ``measured_h`` it is replaced by the fill distance
    of each level measured against all neighbours.

    If a scale adds no new point the hierarchy is truncated there with a
    warning.
    """
    if len(neighbors) == 0:
        raise HierarchyError("no points to subsample")
    if M < 2:
        raise HierarchyError("at least two levels are required")
    if box is None:
        u = rescale_to_unit_cube(neighbors)[0].coords
    else:
        if box.dim != neighbors.dim:
            raise HierarchyError("box dimension does not match")
        ext = np.where(box.extent > 0, box.extent, 1.0)
        u = np.clip((neighbors.coords - box.lower) / ext, 0.0, 1.0)

    chosen = np.zeros(len(u), dtype=bool)
    levels: list[np.ndarray] = []
    for m in range(M):
        reps = _cell_representatives(u, m)
        before = int(chosen.sum())
        chosen[reps] = True
        if levels and int(chosen.sum()) == before:
            warnings.warn(
                f"subsampling stops growing at scale {m}; using {len(levels)} levels instead of {M}",
                RuntimeWarning,
                stacklevel=2,
            )
            break
        levels.append(np.flatnonzero(chosen))
    if len(levels) < 2:
        raise HierarchyError("subsampling produced fewer than two levels")

    if measured_h:
        h = np.array([fill_distance(neighbors.subset(lv), neighbors) for lv in levels])
    else:
        diam = (box or bounding_box(neighbors)).diameter
        if diam == 0:
            raise GeometryError("neighbors have zero extent")
        h = np.array([2.0**-m * diam / 2.0 for m in range(len(levels))])
    return Hierarchy(neighbors, tuple(levels), h, "subsample")
