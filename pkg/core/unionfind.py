"""
Flat-array union-find kernels compiled with numba.

parent[x] == x marks a root; union is by size with path halving in find. The
kernels release the GIL so seeds can be swept on threads.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def find(x, parent):
    while x != parent[x]:
        # path halving
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def union(x, y, parent, size):
    """Merge the sets of x and y; returns the surviving root, or -1 if already joined."""
    rx = find(x, parent)
    ry = find(y, parent)
    if rx == ry:
        return -1
    if size[rx] < size[ry]:
        rx, ry = ry, rx
    parent[ry] = rx
    size[rx] += size[ry]
    return rx


@njit(cache=True, nogil=True)
def component_labels(n_vertices, edges, open_mask):
    """Label every vertex by the smallest vertex index of its open component."""
    parent = np.arange(n_vertices)
    size = np.ones(n_vertices, dtype=np.int64)
    for i in range(edges.shape[0]):
        if open_mask[i]:
            union(edges[i, 0], edges[i, 1], parent, size)
    labels = np.empty(n_vertices, dtype=np.int64)
    smallest = np.full(n_vertices, -1, dtype=np.int64)
    for v in range(n_vertices):
        r = find(v, parent)
        if smallest[r] < 0:
            smallest[r] = v
        labels[v] = smallest[r]
    return labels


@njit(cache=True, nogil=True)
def sweep_kernel(n_vertices, edges, order, counts, outer, anchors, tau, root):
    """
    Insert edges in mark order and snapshot cluster statistics after counts[i] insertions.

    Returns per-snapshot arrays: largest, second largest, number of clusters with at
    least tau outer-layer vertices, outer-layer vertices in the root's cluster, and
    the fraction of anchor pairs sharing a cluster.
    """
    n_points = counts.shape[0]
    parent = np.arange(n_vertices)
    size = np.ones(n_vertices, dtype=np.int64)
    bcount = np.zeros(n_vertices, dtype=np.int64)
    giants = 0
    for v in range(n_vertices):
        if outer[v]:
            bcount[v] = 1
        if bcount[v] >= tau:
            giants += 1
    largest_now = 1 if n_vertices > 0 else 0

    largest = np.zeros(n_points, dtype=np.int64)
    second = np.zeros(n_points, dtype=np.int64)
    giant_counts = np.zeros(n_points, dtype=np.int64)
    root_mass = np.zeros(n_points, dtype=np.int64)
    pairs = np.zeros(n_points, dtype=np.float64)

    n_anchors = anchors.shape[0]
    anchor_roots = np.empty(n_anchors, dtype=np.int64)
    total_pairs = n_anchors * (n_anchors - 1) // 2

    k = 0
    for gi in range(n_points):
        while k < counts[gi]:
            e = order[k]
            rx = find(edges[e, 0], parent)
            ry = find(edges[e, 1], parent)
            if rx != ry:
                if size[rx] < size[ry]:
                    rx, ry = ry, rx
                if bcount[rx] >= tau:
                    giants -= 1
                if bcount[ry] >= tau:
                    giants -= 1
                parent[ry] = rx
                size[rx] += size[ry]
                bcount[rx] += bcount[ry]
                if bcount[rx] >= tau:
                    giants += 1
                if size[rx] > largest_now:
                    largest_now = size[rx]
            k += 1

        first = 0
        runner_up = 0
        for v in range(n_vertices):
            if parent[v] == v:
                s = size[v]
                if s > first:
                    runner_up = first
                    first = s
                elif s > runner_up:
                    runner_up = s
        largest[gi] = largest_now
        second[gi] = runner_up
        giant_counts[gi] = giants
        if n_vertices > 0:
            root_mass[gi] = bcount[find(root, parent)]

        if total_pairs == 0:
            pairs[gi] = 1.0
        else:
            for i in range(n_anchors):
                anchor_roots[i] = find(anchors[i], parent)
            joined = 0
            for i in range(n_anchors):
                for j in range(i + 1, n_anchors):
                    if anchor_roots[i] == anchor_roots[j]:
                        joined += 1
            pairs[gi] = joined / total_pairs

    return largest, second, giant_counts, root_mass, pairs
