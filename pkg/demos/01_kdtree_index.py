"""KD-tree spatial index: exact queries and sub-linear search cost.

Builds the index over uniform random points, cross-checks a few queries
against a brute-force scan, and shows how the number of visited tree
nodes grows with n (it should grow much slower than n itself).
"""

import numpy as np

from pairlik import PointSet, build_tree, distance_summary, nearest_neighbors

rng = np.random.default_rng(0)
points = PointSet(rng.uniform(0, 1000, size=(500, 2)))
tree = build_tree(points)

print(f"built tree over {points.n} points: depth {tree.depth}, "
      f"{tree.node_count} nodes, {len(tree.leaf_nodes())} leaves")

summary = distance_summary(points)
print(f"pairwise distances: mean {summary.r_mean:.1f}, max {summary.r_max:.1f}")

print("\nnearest neighbors of point 0 (k=3, radius unbounded):")
for idx, dist in nearest_neighbors(tree, points, 0, k=3).entries():
    print(f"  point {idx:3d} at distance {dist:.2f}")

# brute-force cross-check on a handful of queries
ok = 0
for q in range(25):
    got = tree.query(q, k=4, radius=summary.r_mean)
    d2 = ((points.coords - points.coords[q]) ** 2).sum(axis=1)
    d2[q] = np.inf
    want = sorted((d2[j], j) for j in range(points.n)
                  if d2[j] <= summary.r_mean ** 2)[:4]
    assert got.indices.tolist() == [j for _, j in want]
    ok += 1
print(f"\n{ok}/25 queries identical to the brute-force scan")

print("\nmean visited nodes per query (k=2):")
for n in (250, 500, 1000, 2000, 4000):
    pts = PointSet(rng.uniform(0, 1000, size=(n, 2)))
    t = build_tree(pts)
    visits = [t.query(int(q), k=2, return_visits=True)[1]
              for q in rng.integers(0, n, size=200)]
    print(f"  n={n:5d}: {np.mean(visits):6.1f}")
