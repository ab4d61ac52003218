"""Numba kernels for KD-tree queries and greedy pairing.

All kernels work on the flat array representation produced by
``spatial.build_tree``: per-node arrays (split dim/value, child indices,
leaf ranges) plus a permutation of point ids grouped by leaf.  Distances
are compared as squares throughout; ties are broken by lower point id.
"""

import numpy as np
from numba import njit

# Sentinel for "no child / leaf node" in the node arrays.
NO_NODE = -1


@njit(cache=True, nogil=True)
def _heap_worse(d2a, ida, d2b, idb):
    # lexicographic (distance^2, id): True if a ranks after b
    if d2a > d2b:
        return True
    if d2a < d2b:
        return False
    return ida > idb


@njit(cache=True, nogil=True)
def _sift_down(hd2, hid, size, root):
    while True:
        child = 2 * root + 1
        if child >= size:
            return
        if child + 1 < size and _heap_worse(hd2[child + 1], hid[child + 1], hd2[child], hid[child]):
            child += 1
        if _heap_worse(hd2[child], hid[child], hd2[root], hid[root]):
            hd2[root], hd2[child] = hd2[child], hd2[root]
            hid[root], hid[child] = hid[child], hid[root]
            root = child
        else:
            return


@njit(cache=True, nogil=True)
def _heap_push(hd2, hid, size, d2, idx):
    # insert and sift up; caller guarantees size < capacity
    pos = size
    hd2[pos] = d2
    hid[pos] = idx
    while pos > 0:
        parent = (pos - 1) // 2
        if _heap_worse(hd2[pos], hid[pos], hd2[parent], hid[parent]):
            hd2[pos], hd2[parent] = hd2[parent], hd2[pos]
            hid[pos], hid[parent] = hid[parent], hid[pos]
            pos = parent
        else:
            break
    return size + 1


@njit(cache=True, nogil=True)
def knn_query(split_dim, split_val, left, right, leaf_lo, leaf_hi, perm,
              xs, ys, depth_cap, qx, qy, exclude, k, radius2):
    """Exact k-nearest-neighbor search bounded by a squared radius.

    Returns (ids, d2, count, visits): up to ``k`` point ids sorted by
    ascending (squared distance, id), the query point ``exclude`` omitted,
    and the number of tree nodes visited.
    """
    hd2 = np.empty(k, np.float64)
    hid = np.empty(k, np.int64)
    hsize = 0
    # DFS stack: node index plus squared distance to its splitting plane
    stack = np.empty(depth_cap, np.int64)
    plane = np.empty(depth_cap, np.float64)
    top = 0
    stack[0] = 0
    plane[0] = 0.0
    top = 1
    visits = 0
    while top > 0:
        top -= 1
        node = stack[top]
        pd2 = plane[top]
        if hsize == k:
            bound = hd2[0] if hd2[0] < radius2 else radius2
        else:
            bound = radius2
        if pd2 > bound:
            continue
        visits += 1
        dim = split_dim[node]
        if dim == NO_NODE:
            for t in range(leaf_lo[node], leaf_hi[node]):
                idx = perm[t]
                if idx == exclude:
                    continue
                dx = xs[idx] - qx
                dy = ys[idx] - qy
                d2 = dx * dx + dy * dy
                if d2 > radius2:
                    continue
                if hsize < k:
                    hsize = _heap_push(hd2, hid, hsize, d2, idx)
                elif _heap_worse(hd2[0], hid[0], d2, idx):
                    hd2[0] = d2
                    hid[0] = idx
                    _sift_down(hd2, hid, hsize, 0)
            continue
        coord = qx if dim == 0 else qy
        diff = coord - split_val[node]
        if diff < 0.0:
            near = left[node]
            far = right[node]
        else:
            near = right[node]
            far = left[node]
        # far side first so the near side is popped (and searched) first
        stack[top] = far
        plane[top] = diff * diff
        top += 1
        stack[top] = near
        plane[top] = pd2
        top += 1
    # heapsort in place: repeatedly move the worst element to the tail
    size = hsize
    while size > 1:
        size -= 1
        hd2[0], hd2[size] = hd2[size], hd2[0]
        hid[0], hid[size] = hid[size], hid[0]
        _sift_down(hd2, hid, size, 0)
    return hid[:hsize], hd2[:hsize], hsize, visits


@njit(cache=True, nogil=True)
def knn_all(split_dim, split_val, left, right, leaf_lo, leaf_hi, perm,
            xs, ys, depth_cap, k):
    """Unbounded k-NN for every point (self excluded); rows padded with -1."""
    n = xs.shape[0]
    out_ids = np.full((n, k), -1, np.int64)
    out_d = np.full((n, k), np.inf, np.float64)
    for p in range(n):
        ids, d2, cnt, _ = knn_query(split_dim, split_val, left, right,
                                    leaf_lo, leaf_hi, perm, xs, ys, depth_cap,
                                    xs[p], ys[p], p, k, np.inf)
        for j in range(cnt):
            out_ids[p, j] = ids[j]
            out_d[p, j] = np.sqrt(d2[j])
    return out_ids, out_d


@njit(cache=True, nogil=True)
def greedy_pair(split_dim, split_val, left, right, leaf_lo, leaf_hi, perm,
                xs, ys, depth_cap, order, radius):
    """Greedy one-shot pairing: scan points in ``order``, couple each
    unpaired point with its nearest unpaired neighbor within ``radius``.

    Starts each search at k=2 and doubles k while every in-radius candidate
    found so far is already paired; a query returning fewer than k entries
    means the radius ball is exhausted.
    """
    n = xs.shape[0]
    paired = np.zeros(n, np.uint8)
    cap = n // 2
    out_i = np.empty(cap, np.int64)
    out_l = np.empty(cap, np.int64)
    out_d = np.empty(cap, np.float64)
    m = 0
    radius2 = radius * radius
    for t in range(order.shape[0]):
        p = order[t]
        if paired[p] == 1:
            continue
        k = 2
        choice = -1
        choice_d2 = 0.0
        while True:
            ids, d2, cnt, _ = knn_query(split_dim, split_val, left, right,
                                        leaf_lo, leaf_hi, perm, xs, ys,
                                        depth_cap, xs[p], ys[p], p, k, radius2)
            for j in range(cnt):
                if paired[ids[j]] == 0:
                    choice = ids[j]
                    choice_d2 = d2[j]
                    break
            if choice >= 0 or cnt < k:
                break
            k = k * 2 if k * 2 < n else n
        if choice >= 0:
            paired[p] = 1
            paired[choice] = 1
            out_i[m] = p
            out_l[m] = choice
            out_d[m] = np.sqrt(choice_d2)
            m += 1
    return out_i[:m], out_l[:m], out_d[:m], paired
