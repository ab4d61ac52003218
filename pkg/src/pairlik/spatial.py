"""Planar point sets and an exact KD-tree spatial index.

The tree is a median-split KD-tree over 2-D points: each internal node
splits on the dimension with the larger coordinate spread (x/y alternation
on ties), at the lower median value, with points equal to the threshold
going right.  Leaves normally hold a single point; coincident points
collapse into one leaf.  Queries are exact, radius-bounded, and break
distance ties by lower point id, so results can be checked bit-strictly
against a brute-force scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from . import _kernels
from .errors import EmptyInput, InsufficientPoints


class Point(NamedTuple):
    id: int
    x: float
    y: float


class PointSet:
    """Ordered collection of planar points with optional covariate/response.

    Coordinates are stored as float64 arrays; point ids are implicit
    positions 0..n-1.  ``x_cov``/``y_resp`` hold per-point covariate and
    response values when the set carries regression data.
    """

    def __init__(self, coords, x_cov=None, y_resp=None):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or (coords.size and coords.shape[1] != 2):
            raise ValueError("coords must be an (n, 2) array")
        if coords.size and not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        self.coords = coords
        self.x_cov = None if x_cov is None else np.asarray(x_cov, dtype=np.float64)
        self.y_resp = None if y_resp is None else np.asarray(y_resp, dtype=np.float64)
        for name, arr in (("x_cov", self.x_cov), ("y_resp", self.y_resp)):
            if arr is not None and arr.shape != (len(coords),):
                raise ValueError(f"{name} must have length n")
        self._exact_summary: DistanceSummary | None = None

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def xs(self) -> np.ndarray:
        return self.coords[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.coords[:, 1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Point:
        x, y = self.coords[i]
        return Point(int(i) if i >= 0 else self.n + int(i), float(x), float(y))

    def __iter__(self) -> Iterator[Point]:
        return (self[i] for i in range(self.n))

    def duplicate_count(self) -> int:
        """Number of points sharing coordinates with an earlier point."""
        if self.n == 0:
            return 0
        uniq = np.unique(self.coords, axis=0)
        return self.n - len(uniq)

    def has_values(self) -> bool:
        return self.x_cov is not None and self.y_resp is not None


@dataclass(frozen=True)
class NeighborList:
    """k-NN query result: ids and distances sorted by (distance, id)."""

    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def entries(self) -> list[tuple[int, float]]:
        return [(int(i), float(d)) for i, d in zip(self.indices, self.distances)]


@dataclass(frozen=True)
class DistanceSummary:
    """Mean and maximum pairwise distance of a point set."""

    r_mean: float
    r_max: float
    exact: bool
    n_pairs: int


@dataclass
class KdTree:
    """Immutable KD-tree over a point set (flat array node storage).

    ``split_dim[i] == -1`` marks leaves, whose points are
    ``perm[leaf_lo[i]:leaf_hi[i]]``.  After construction the tree is
    read-only and may be queried concurrently from any number of threads.
    """

    xs: np.ndarray
    ys: np.ndarray
    split_dim: np.ndarray
    split_val: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_lo: np.ndarray
    leaf_hi: np.ndarray
    perm: np.ndarray
    depth: int
    leaf_size: int
    duplicates: int = 0
    _depth_cap: int = field(init=False, default=0)

    def __post_init__(self):
        # stack capacity for iterative DFS: two pushes per level
        self._depth_cap = 2 * (self.depth + 2)

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def node_count(self) -> int:
        return len(self.split_dim)

    def leaf_nodes(self) -> list[int]:
        return [i for i in range(self.node_count) if self.split_dim[i] == _kernels.NO_NODE]

    def leaf_indices(self) -> list[np.ndarray]:
        """Point ids held by each leaf, in node order."""
        return [self.perm[self.leaf_lo[i]:self.leaf_hi[i]] for i in self.leaf_nodes()]

    def query(self, query: int, k: int, radius: float = np.inf,
              return_visits: bool = False):
        """Exact k nearest neighbors of point ``query`` within ``radius``."""
        if not 0 <= query < self.n:
            raise IndexError(f"query index {query} out of range 0..{self.n - 1}")
        if k < 1:
            raise ValueError("k must be >= 1")
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        k_eff = min(k, self.n)  # never more than n-1 results; n is a safe cap
        ids, d2, cnt, visits = _kernels.knn_query(
            self.split_dim, self.split_val, self.left, self.right,
            self.leaf_lo, self.leaf_hi, self.perm, self.xs, self.ys,
            self._depth_cap, self.xs[query], self.ys[query], query,
            k_eff, radius * radius)
        out = NeighborList(ids[:cnt].copy(), np.sqrt(d2[:cnt]))
        if return_visits:
            return out, int(visits)
        return out

    def descend(self, x: float, y: float) -> int:
        """Leaf node index whose region contains coordinate (x, y)."""
        node = 0
        while self.split_dim[node] != _kernels.NO_NODE:
            coord = x if self.split_dim[node] == 0 else y
            node = self.left[node] if coord < self.split_val[node] else self.right[node]
        return int(node)


def build_tree(points: PointSet, leaf_size: int = 1) -> KdTree:
    """Build a KD-tree over ``points``.

    Deterministic for a given input ordering: split dimension is the one
    with maximum spread (x/y alternation by depth on ties), threshold is
    the lower median, equal values go right.  When the lower median equals
    the subset minimum the threshold is bumped to the next distinct value
    so every split makes progress; fully coincident subsets become one
    leaf regardless of ``leaf_size``.
    """
    if points.n == 0:
        raise EmptyInput("cannot build a KD-tree over an empty point set")
    if leaf_size < 1:
        raise ValueError("leaf_size must be >= 1")
    coords = points.coords
    n = points.n

    split_dim: list[int] = []
    split_val: list[float] = []
    left: list[int] = []
    right: list[int] = []
    leaf_lo: list[int] = []
    leaf_hi: list[int] = []
    perm = np.empty(n, dtype=np.int64)
    cursor = 0
    max_depth = 0

    def new_node() -> int:
        split_dim.append(_kernels.NO_NODE)
        split_val.append(0.0)
        left.append(_kernels.NO_NODE)
        right.append(_kernels.NO_NODE)
        leaf_lo.append(0)
        leaf_hi.append(0)
        return len(split_dim) - 1

    def make_leaf(node: int, ids: np.ndarray) -> None:
        nonlocal cursor
        lo = cursor
        perm[lo:lo + len(ids)] = np.sort(ids)
        cursor += len(ids)
        leaf_lo[node] = lo
        leaf_hi[node] = cursor

    def rec(ids: np.ndarray, depth: int) -> int:
        nonlocal max_depth
        max_depth = max(max_depth, depth)
        node = new_node()
        m = len(ids)
        if m <= leaf_size:
            make_leaf(node, ids)
            return node
        sub = coords[ids]
        spread = sub.max(axis=0) - sub.min(axis=0)
        if spread[0] == 0.0 and spread[1] == 0.0:
            make_leaf(node, ids)  # coincident points
            return node
        if spread[0] > spread[1]:
            dim = 0
        elif spread[1] > spread[0]:
            dim = 1
        else:
            dim = depth % 2
        vals = sub[:, dim]
        kth = (m - 1) // 2
        thr = float(np.partition(vals, kth)[kth])
        mask = vals < thr
        if not mask.any():
            # lower median equals the minimum; advance to the next value
            thr = float(vals[vals > thr].min())
            mask = vals < thr
        split_dim[node] = dim
        split_val[node] = thr
        left[node] = rec(ids[mask], depth + 1)
        right[node] = rec(ids[~mask], depth + 1)
        return node

    rec(np.arange(n, dtype=np.int64), 0)
    return KdTree(
        xs=np.ascontiguousarray(coords[:, 0]),
        ys=np.ascontiguousarray(coords[:, 1]),
        split_dim=np.asarray(split_dim, dtype=np.int64),
        split_val=np.asarray(split_val, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        leaf_lo=np.asarray(leaf_lo, dtype=np.int64),
        leaf_hi=np.asarray(leaf_hi, dtype=np.int64),
        perm=perm,
        depth=max_depth,
        leaf_size=leaf_size,
        duplicates=points.duplicate_count(),
    )


def nearest_neighbors(tree: KdTree, points: PointSet, query: int, k: int,
                      radius: float = np.inf,
                      return_visits: bool = False):
    """Exact k nearest neighbors of ``points[query]`` within ``radius``.

    Entries are sorted by nondecreasing distance with ties broken by lower
    point id; the query point itself is never returned.
    """
    if tree.n != points.n:
        raise ValueError("tree was built over a different point set size")
    return tree.query(query, k, radius, return_visits=return_visits)


def _pair_block_stats(coords: np.ndarray, block: int = 256):
    """Streaming sum/max/count of all pairwise distances (O(n^2) time,
    O(block*n) memory)."""
    n = len(coords)
    total = 0.0
    d_max = 0.0
    count = 0
    for a in range(0, n, block):
        b = min(a + block, n)
        rows = coords[a:b]
        diff = rows[:, None, :] - coords[None, a:, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        # strict upper triangle in absolute indices
        mask = np.arange(a, n)[None, :] > np.arange(a, b)[:, None]
        sel = d[mask]
        total += float(sel.sum())
        if sel.size:
            d_max = max(d_max, float(sel.max()))
        count += sel.size
    return total, d_max, count


def distance_summary(points: PointSet, mode: str = "exact",
                     m: int = 100_000, seed: int = 0) -> DistanceSummary:
    """Mean and max pairwise distance, exact or sampled.

    Exact mode visits all n(n-1)/2 unordered pairs.  Sampled mode draws
    ``m`` pairs uniformly with replacement (seeded) and reports the sample
    mean and sample max with ``exact=False``.
    """
    if points.n < 2:
        raise InsufficientPoints("distance summary needs at least 2 points")
    if mode == "exact":
        total, d_max, count = _pair_block_stats(points.coords)
        return DistanceSummary(r_mean=total / count, r_max=d_max,
                               exact=True, n_pairs=count)
    if mode == "sampled":
        if m < 1:
            raise ValueError("sample size m must be >= 1")
        rng = np.random.default_rng(seed)
        n = points.n
        i = rng.integers(0, n, size=m)
        j = rng.integers(0, n - 1, size=m)
        j = j + (j >= i)  # uniform over off-diagonal pairs
        diff = points.coords[i] - points.coords[j]
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return DistanceSummary(r_mean=float(d.mean()), r_max=float(d.max()),
                               exact=False, n_pairs=m)
    raise ValueError(f"unknown mode {mode!r} (use 'exact' or 'sampled')")


# Exact summaries above this size switch to sampling when resolved lazily.
EXACT_SUMMARY_MAX_N = 20_000


def cached_summary(points: PointSet) -> DistanceSummary:
    """Distance summary with the library-wide exact/sampled policy, cached
    on the point set (exact for n <= 20000, seeded sampling above)."""
    if points._exact_summary is None:
        if points.n <= EXACT_SUMMARY_MAX_N:
            points._exact_summary = distance_summary(points, "exact")
        else:
            points._exact_summary = distance_summary(points, "sampled")
    return points._exact_summary
