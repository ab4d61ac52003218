"""Brute-force oracles shared across test modules.

These deliberately avoid the library's KD-tree path: squared distances,
full O(n^2) matrices, and plain scans, so the fast implementations can be
checked exactly against an independent route.
"""

import numpy as np


def squared_distance_matrix(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def brute_knn(coords: np.ndarray, query: int, k: int, radius: float):
    """k nearest neighbors by full scan; ties broken by lower id.

    Returns (ids, dists) sorted by (squared distance, id) ascending,
    self excluded, distances strictly bounded by radius (inclusive).
    """
    n = len(coords)
    d2 = squared_distance_matrix(coords)[query]
    candidates = [(d2[j], j) for j in range(n)
                  if j != query and d2[j] <= radius * radius]
    candidates.sort()
    chosen = candidates[:k]
    return ([j for _, j in chosen],
            [float(np.sqrt(d)) for d, j in chosen])


def brute_greedy_pairs(coords: np.ndarray, radius: float,
                       order=None):
    """Reference greedy pairing on a full distance matrix.

    Scans in ``order`` (ascending id by default); couples each unpaired
    point with its nearest unpaired neighbor within the radius, ties by
    lower id (argmin returns the first minimum).
    """
    n = len(coords)
    d2 = squared_distance_matrix(coords)
    r2 = radius * radius
    paired = np.zeros(n, dtype=bool)
    if order is None:
        order = range(n)
    out = []
    for p in order:
        if paired[p]:
            continue
        row = d2[p].copy()
        row[p] = np.inf
        row[paired] = np.inf
        j = int(np.argmin(row))
        if row[j] <= r2:
            out.append((p, j, float(np.sqrt(row[j]))))
            paired[p] = paired[j] = True
    return out


def uniform_points(n: int, seed: int, side: float = 1000.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, side, size=(n, 2))
