"""Point sets and the metric queries built on them.

Everything downstream works with :class:`PointSet`, an immutable ``(n, d)``
array of pairwise-distinct sites.  The queries here (fill distance,
separation radius, Chebyshev nearest neighbours, bounding boxes, unit-cube
rescaling) are thin and exact; scipy's kd-tree is used where it gives the
same answer as a brute-force scan, only faster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "DUPLICATE_TOLERANCE",
    "KNN_SCAN_LIMIT",
    "AffineMap",
    "BoundingBox",
    "DuplicatePointError",
    "GeometryError",
    "PointSet",
    "bounding_box",
    "fill_distance",
    "knn_chebyshev",
    "rescale_to_unit_cube",
    "separation_radius",
]

#: Two sites closer than this (Euclidean) count as duplicates.
DUPLICATE_TOLERANCE = 1e-12

#: Above this many points, :func:`knn_chebyshev` switches from a scan to a kd-tree.
KNN_SCAN_LIMIT = 10_000


class GeometryError(ValueError):
    """Invalid geometric input (empty sets, dimension mismatch, ...)."""


class DuplicatePointError(GeometryError):
    """Two sites coincide within :data:`DUPLICATE_TOLERANCE`."""

    def __init__(self, first: int, second: int):
        self.first = int(first)
        self.second = int(second)
        super().__init__(f"points {self.first} and {self.second} coincide")


def _as_coords(points) -> np.ndarray:
    arr = np.array(points, dtype=float, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise GeometryError(f"expected an (n, d) array, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise GeometryError("dimension must be at least 1")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("coordinates must be finite")
    return arr


def _first_duplicate(coords: np.ndarray) -> tuple[int, int] | None:
    if len(coords) < 2:
        return None
    pairs = cKDTree(coords).query_pairs(DUPLICATE_TOLERANCE, output_type="ndarray")
    if len(pairs) == 0:
        return None
    pairs = np.sort(pairs, axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    i, j = pairs[order[0]]
    return int(i), int(j)


class PointSet:
    """Ordered, immutable set of distinct sites in R^d.

    Parameters
    ----------
    points : array_like
        ``(n, d)`` coordinates.  A 1-D array is read as ``n`` points in R^1.
    check : bool
        Verify that the points are pairwise distinct.  Internal constructors
        that derive subsets of an already validated set pass ``False``.
    """

    __slots__ = ("_coords",)

    def __init__(self, points, *, check: bool = True):
        coords = _as_coords(points)
        if check:
            dup = _first_duplicate(coords)
            if dup is not None:
                raise DuplicatePointError(*dup)
        coords.setflags(write=False)
        self._coords = coords

    @property
    def coords(self) -> np.ndarray:
        """Read-only ``(n, d)`` coordinate array."""
        return self._coords

    @property
    def dim(self) -> int:
        return self._coords.shape[1]

    def __len__(self) -> int:
        return self._coords.shape[0]

    def __repr__(self) -> str:
        return f"PointSet(n={len(self)}, dim={self.dim})"

    def subset(self, indices) -> "PointSet":
        """Points at ``indices``, in the given order (no duplicate check needed)."""
        idx = np.asarray(indices, dtype=np.intp)
        return PointSet(self._coords[idx], check=False)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise GeometryError("lower and upper must be vectors of equal length")
        if np.any(lo > hi):
            raise GeometryError("lower must not exceed upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def extent(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.extent))

    def contains(self, points) -> np.ndarray:
        """Boolean mask of the rows of ``points`` lying in the closed box."""
        pts = _as_coords(points)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


@dataclass(frozen=True)
class AffineMap:
    """Per-axis map ``u = (x - offset) * scale``."""

    offset: np.ndarray
    scale: np.ndarray

    def forward(self, points) -> np.ndarray:
        return (_as_coords(points) - self.offset) * self.scale

    def inverse(self, points) -> np.ndarray:
        return _as_coords(points) / self.scale + self.offset


def _require_nonempty(X: PointSet, what: str = "point set") -> None:
    if len(X) == 0:
        raise GeometryError(f"{what} is empty")


def fill_distance(X: PointSet, candidates: PointSet) -> float:
    """Largest distance from a candidate to its nearest site in ``X``.

    The candidate set stands in for the continuous domain, so the result is
    the discrete sup ``max_c min_x |c - x|_2``.
    """
    _require_nonempty(X)
    _require_nonempty(candidates, "candidate set")
    if X.dim != candidates.dim:
        raise GeometryError(f"dimension mismatch: {X.dim} vs {candidates.dim}")
    dist, _ = cKDTree(X.coords).query(candidates.coords, k=1)
    return float(np.max(dist))


def separation_radius(X: PointSet) -> float:
    """Half the smallest pairwise Euclidean distance."""
    if len(X) < 2:
        raise GeometryError("separation radius needs at least two points")
    dist, _ = cKDTree(X.coords).query(X.coords, k=2)
    return 0.5 * float(np.min(dist[:, 1]))


def _chebyshev_to(coords: np.ndarray, center: np.ndarray) -> np.ndarray:
    return np.max(np.abs(coords - center), axis=1)


def knn_chebyshev(X: PointSet, center, k: int) -> np.ndarray:
    """Indices of the ``k`` sites nearest to ``center`` in the max-norm.

    Sorted by distance, ties broken by ascending index.  Sets with more than
    :data:`KNN_SCAN_LIMIT` points go through a kd-tree; the tree only proposes
    a candidate superset, and ranking is always done on the same distances an
    exhaustive scan would compute, so both paths agree exactly.
    """
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (X.dim,):
        raise GeometryError(f"center must have {X.dim} coordinates")
    k = int(k)
    if k < 1 or k > len(X):
        raise GeometryError(f"k={k} outside [1, {len(X)}]")
    coords = X.coords
    if len(X) <= KNN_SCAN_LIMIT:
        cand = np.arange(len(X))
    else:
        tree = _tree_for(X)
        dk, _ = tree.query(c, k=k, p=np.inf)
        radius = float(np.max(dk))
        radius = radius * (1 + 1e-12) + 1e-300
        cand = np.asarray(tree.query_ball_point(c, radius, p=np.inf), dtype=np.intp)
    dist = _chebyshev_to(coords[cand], c)
    order = np.lexsort((cand, dist))[:k]
    return cand[order]


# kd-trees are cached per PointSet so repeated queries (one per center) reuse them.
_TREE_CACHE: dict[int, tuple[PointSet, cKDTree]] = {}


def _tree_for(X: PointSet) -> cKDTree:
    hit = _TREE_CACHE.get(id(X))
    if hit is not None and hit[0] is X:
        return hit[1]
    tree = cKDTree(X.coords)
    _TREE_CACHE.clear()
    _TREE_CACHE[id(X)] = (X, tree)
    return tree


def bounding_box(X: PointSet) -> BoundingBox:
    _require_nonempty(X)
    return BoundingBox(X.coords.min(axis=0), X.coords.max(axis=0))


def rescale_to_unit_cube(X: PointSet) -> tuple[PointSet, AffineMap]:
    """Map ``X`` affinely onto ``[0, 1]^d``.

    Axes with zero extent keep scale 1, so they collapse to 0 and the map
    remains invertible.
    """
    box = bounding_box(X)
    ext = box.extent
    scale = np.where(ext > 0, 1.0 / np.where(ext > 0, ext, 1.0), 1.0)
    amap = AffineMap(offset=box.lower.copy(), scale=scale)
    # Dividing by the extent (not multiplying by its reciprocal) maps the
    # extremes exactly onto 0 and 1.
    u = (X.coords - box.lower) / np.where(ext > 0, ext, 1.0)
    np.clip(u, 0.0, 1.0, out=u)
    return PointSet(u, check=False), amap
