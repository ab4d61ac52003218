"""Greedy nearest-neighbor coupling of spatial points within a radius.

Points are scanned in a fixed order (ascending id by default).  Each
unpaired point is coupled with its nearest still-unpaired neighbor inside
the radius; both members then leave the candidate pool, so every point
appears in at most one couplet.  Points with no available in-radius
partner stay unpaired and are reported, not silently dropped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import InsufficientPoints, InvalidRadius
from .spatial import KdTree, PointSet, build_tree, cached_summary

log = logging.getLogger(__name__)

# bucketed leaves speed up queries without changing their results
PAIRING_LEAF_SIZE = 16


@dataclass(frozen=True)
class RadiusSpec:
    """Pairing radius rule: mean / max pairwise distance, mean plus a
    buffer in coordinate units, or a fixed value."""

    kind: str  # "mean" | "max" | "mean_plus" | "fixed"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("mean", "max", "mean_plus", "fixed"):
            raise ValueError(f"unknown radius kind {self.kind!r}")
        if self.kind == "mean_plus" and (self.value is None or self.value < 0):
            raise ValueError("buffer must be >= 0")
        if self.kind == "fixed" and (self.value is None or self.value <= 0):
            raise ValueError("fixed radius must be > 0")

    @classmethod
    def mean(cls) -> "RadiusSpec":
        return cls("mean")

    @classmethod
    def max(cls) -> "RadiusSpec":
        return cls("max")

    @classmethod
    def mean_plus(cls, buffer: float) -> "RadiusSpec":
        return cls("mean_plus", float(buffer))

    @classmethod
    def fixed(cls, value: float) -> "RadiusSpec":
        return cls("fixed", float(value))

    @classmethod
    def parse(cls, text: str) -> "RadiusSpec":
        """Parse 'mean', 'max', 'mean+H', or a bare positive number."""
        s = text.strip().lower()
        if s == "mean":
            return cls.mean()
        if s == "max":
            return cls.max()
        if s.startswith("mean+"):
            return cls.mean_plus(float(s[5:]))
        return cls.fixed(float(s))

    def label(self) -> str:
        if self.kind == "mean":
            return "mean"
        if self.kind == "max":
            return "max"
        if self.kind == "mean_plus":
            return f"mean+{self.value:g}"
        return f"{self.value:g}"


class Couplet(NamedTuple):
    i: int
    l: int
    dist: float


@dataclass(frozen=True)
class CoupletSet:
    """Disjoint pairs produced by the greedy scan.

    ``i_idx``/``l_idx``/``dists`` are aligned arrays (one entry per
    couplet, in formation order); ``sparse_distances`` holds the two
    symmetric entries written for each couplet.  Immutable after
    construction.
    """

    n: int
    i_idx: np.ndarray
    l_idx: np.ndarray
    dists: np.ndarray
    radius: float

    @property
    def q(self) -> int:
        return len(self.i_idx)

    @property
    def couplets(self) -> list[Couplet]:
        return [Couplet(int(a), int(b), float(d))
                for a, b, d in zip(self.i_idx, self.l_idx, self.dists)]

    @property
    def paired(self) -> frozenset[int]:
        return frozenset(map(int, np.concatenate([self.i_idx, self.l_idx])))

    @property
    def unpaired(self) -> frozenset[int]:
        return frozenset(range(self.n)) - self.paired

    @property
    def sparse_distances(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = {}
        for a, b, d in zip(self.i_idx, self.l_idx, self.dists):
            out[(int(a), int(b))] = float(d)
            out[(int(b), int(a))] = float(d)
        return out


def resolve_radius(points: PointSet, spec: RadiusSpec) -> float:
    """Turn a radius rule into a concrete positive radius for ``points``."""
    if points.n < 2:
        raise InsufficientPoints("radius resolution needs at least 2 points")
    if spec.kind == "fixed":
        radius = float(spec.value)
    else:
        summary = cached_summary(points)
        if spec.kind == "mean":
            radius = summary.r_mean
        elif spec.kind == "max":
            radius = summary.r_max
        else:  # mean_plus
            radius = summary.r_mean + float(spec.value)
    if not radius > 0:
        raise InvalidRadius(f"resolved radius {radius} is not positive")
    return radius


def pair_points(points: PointSet, radius: float, order: np.ndarray | None = None,
                tree: KdTree | None = None,
                min_separation: float | None = None) -> CoupletSet:
    """Greedy disjoint pairing of ``points`` within ``radius``.

    ``order`` overrides the ascending-id scan order (e.g. a seeded
    permutation for sensitivity analysis).  ``min_separation``, when set,
    post-filters couplets whose members lie within that distance of an
    earlier kept couplet's members.
    """
    if points.n < 2:
        raise InsufficientPoints("pairing needs at least 2 points")
    if not radius > 0:
        raise InvalidRadius(f"radius must be positive, got {radius}")
    if tree is None:
        tree = build_tree(points, leaf_size=min(PAIRING_LEAF_SIZE, points.n))
    if order is None:
        order = np.arange(points.n, dtype=np.int64)
    else:
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(points.n)):
            raise ValueError("order must be a permutation of 0..n-1")
    i_idx, l_idx, dists, _ = _kernels.greedy_pair(
        tree.split_dim, tree.split_val, tree.left, tree.right,
        tree.leaf_lo, tree.leaf_hi, tree.perm, tree.xs, tree.ys,
        tree._depth_cap, order, float(radius))
    cs = CoupletSet(n=points.n, i_idx=i_idx, l_idx=l_idx, dists=dists,
                    radius=float(radius))
    unpaired = points.n - 2 * cs.q
    if unpaired:
        log.warning("%d of %d points left unpaired at radius %g",
                    unpaired, points.n, radius)
    if min_separation is not None:
        cs = filter_separated(points, cs, min_separation, tree=tree)
    return cs


def filter_separated(points: PointSet, cs: CoupletSet, min_separation: float,
                     tree: KdTree | None = None) -> CoupletSet:
    """Keep couplets in formation order, discarding any whose members come
    within ``min_separation`` of a member of an already-kept couplet."""
    if min_separation < 0:
        raise ValueError("min_separation must be >= 0")
    if tree is None:
        tree = build_tree(points, leaf_size=min(PAIRING_LEAF_SIZE, points.n))
    accepted = np.zeros(points.n, dtype=bool)
    keep_rows = []
    for row, (a, b) in enumerate(zip(cs.i_idx, cs.l_idx)):
        clash = False
        for member in (int(a), int(b)):
            nb = tree.query(member, k=points.n, radius=min_separation)
            if accepted[nb.indices].any():
                clash = True
                break
        if not clash:
            keep_rows.append(row)
            accepted[a] = accepted[b] = True
    rows = np.asarray(keep_rows, dtype=np.intp)
    return CoupletSet(n=cs.n, i_idx=cs.i_idx[rows], l_idx=cs.l_idx[rows],
                      dists=cs.dists[rows], radius=cs.radius)


@dataclass(frozen=True)
class PairingReport:
    """Summary of a pairing pass; distance stats are None when q == 0."""

    q: int
    n: int
    pairing_rate: float
    mean_dist: float | None
    max_dist: float | None
    unpaired_count: int


def pairing_report(cs: CoupletSet, n: int | None = None) -> PairingReport:
    """Couple count, pairing rate 2q/n, and intra-couplet distance stats."""
    if n is None:
        n = cs.n
    q = cs.q
    return PairingReport(
        q=q,
        n=n,
        pairing_rate=(2 * q / n) if n else 0.0,
        mean_dist=float(cs.dists.mean()) if q else None,
        max_dist=float(cs.dists.max()) if q else None,
        unpaired_count=n - 2 * q,
    )
