"""Pure Python / numpy versions of the numerical kernels.

These mirror the Cython routines in ``_core.pyx`` one-to-one and are used
whenever the compiled extension is unavailable (or disabled through the
``MESHROUTE_PURE_PYTHON`` environment variable).
"""
from collections import deque

import numpy as np


def bfs_multi(indptr, indices, sources, max_depth=-1):
    """Breadth-first search from every source over a CSR adjacency.

    Neighbour lists must be sorted ascending; expansion then follows the
    lowest-id-first rule, which fixes the parent of every node.

    Returns ``(dist, parent)``, both ``int32`` arrays of shape
    ``(len(sources), n)``; unreachable cells hold ``-1``.
    """
    n = len(indptr) - 1
    sources = np.asarray(sources, dtype=np.int32)
    dist = np.full((len(sources), n), -1, dtype=np.int32)
    parent = np.full((len(sources), n), -1, dtype=np.int32)
    indptr = indptr.tolist()
    indices = indices.tolist()
    for row, src in enumerate(sources.tolist()):
        d = dist[row]
        p = parent[row]
        seen = [-1] * n
        seen[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            du = seen[u]
            if max_depth >= 0 and du >= max_depth:
                continue
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if seen[v] < 0:
                    seen[v] = du + 1
                    p[v] = u
                    queue.append(v)
        d[:] = seen
    return dist, parent


def prox_discrete(values, zeta, alphabet):
    """Elementwise argmin of ``0.5*(x - v)**2 + zeta * sum_a |x - a|``."""
    v = np.asarray(values, dtype=np.float64)
    a = np.asarray(alphabet, dtype=np.float64)
    k = a.size
    out = np.empty_like(v)
    if k == 0 or zeta == 0.0:
        out[...] = v
        return out
    # x(v) is monotone; the breakpoints split v-space into K+1 open
    # intervals (shifted copies of the gaps of S) and K kink plateaus.
    done = np.zeros(v.shape, dtype=bool)
    for j in range(k + 1):
        shift = zeta * (2 * j - k)
        lo = -np.inf if j == 0 else a[j - 1] + shift
        hi = np.inf if j == k else a[j] + shift
        m = (~done) & (v > lo) & (v < hi)
        out[m] = v[m] - shift
        done |= m
    for j in range(1, k + 1):
        lo = a[j - 1] + zeta * (2 * j - 2 - k)
        hi = a[j - 1] + zeta * (2 * j - k)
        m = (~done) & (v >= lo) & (v <= hi)
        out[m] = a[j - 1]
        done |= m
    return out


STALL_WINDOW = 1000
STALL_RATIO = 0.99


def project_disks(x0, centers, radii_sq, tol=1e-9, max_iter=50000):
    """Extrapolated averaged projections onto an intersection of disks.

    Returns ``(point, max_violation, iterations)`` where ``point`` is the
    iterate with the smallest squared-distance violation seen. The loop
    also stops when a window of ``STALL_WINDOW`` iterations improves the
    best violation by less than 1%, which is how empty intersections end.
    """
    c = np.asarray(centers, dtype=np.float64)
    b = np.asarray(radii_sq, dtype=np.float64)
    r = np.sqrt(b)
    x = np.array(x0, dtype=np.float64)
    m = c.shape[0]
    best = x.copy()
    best_viol = np.inf
    checkpoint = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        diff = x - c
        d2 = np.einsum("ij,ij->i", diff, diff)
        viol = float(np.max(d2 - b))
        viol = max(viol, 0.0)
        if viol < best_viol:
            best_viol = viol
            best = x.copy()
        if viol <= tol:
            break
        if it % STALL_WINDOW == 0:
            if best_viol > STALL_RATIO * checkpoint:
                break
            checkpoint = best_viol
        d = np.sqrt(d2)
        out = d2 > b
        step = np.zeros_like(c)
        step[out] = -diff[out] * (1.0 - r[out] / d[out])[:, None]
        mean_step = step.sum(axis=0) / m
        den = float(mean_step @ mean_step)
        if den == 0.0:
            break
        num = float(np.einsum("ij,ij->", step, step)) / m
        lam = min(num / den, 1e4)
        x = x + lam * mean_step
    else:
        it = max_iter
    return best, best_viol, it
