# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; same signatures as ``_fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def bfs_multi(const int[::1] indptr, const int[::1] indices, sources,
              int max_depth=-1):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef int[::1] src = np.ascontiguousarray(sources, dtype=np.int32)
    cdef Py_ssize_t ns = src.shape[0]
    dist_arr = np.full((ns, n), -1, dtype=np.int32)
    parent_arr = np.full((ns, n), -1, dtype=np.int32)
    cdef int[:, ::1] dist = dist_arr
    cdef int[:, ::1] parent = parent_arr
    queue_arr = np.empty(max(n, 1), dtype=np.int32)
    cdef int[::1] queue = queue_arr
    cdef Py_ssize_t row, head, tail, k
    cdef int u, v, du, s
    for row in range(ns):
        s = src[row]
        dist[row, s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[row, u]
            if max_depth >= 0 and du >= max_depth:
                continue
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if dist[row, v] < 0:
                    dist[row, v] = du + 1
                    parent[row, v] = u
                    queue[tail] = v
                    tail += 1
    return dist_arr, parent_arr


def prox_discrete(values, double zeta, alphabet):
    v_arr = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(alphabet, dtype=np.float64)
    out_arr = np.empty_like(v_arr)
    cdef double[::1] v = v_arr.reshape(-1)
    cdef double[::1] out = out_arr.reshape(-1)
    cdef Py_ssize_t n = v.shape[0]
    cdef int k = a.shape[0]
    cdef Py_ssize_t i
    cdef int j
    cdef double x, lo, hi, shift
    if k == 0 or zeta == 0.0:
        out[:] = v
        return out_arr
    for i in range(n):
        x = v[i]
        # walk intervals left to right; x(v) is monotone in v
        for j in range(k + 1):
            shift = zeta * (2 * j - k)
            lo = -INFINITY if j == 0 else a[j - 1] + shift
            hi = INFINITY if j == k else a[j] + shift
            if x > lo and x < hi:
                out[i] = x - shift
                break
            if j < k and x >= hi and x <= a[j] + zeta * (2 * j + 2 - k):
                out[i] = a[j]
                break
    return out_arr


cdef int STALL_WINDOW = 1000
cdef double STALL_RATIO = 0.99


def project_disks(x0, centers, radii_sq, double tol=1e-9, int max_iter=50000):
    cdef double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(radii_sq, dtype=np.float64)
    cdef Py_ssize_t m = c.shape[0]
    cdef Py_ssize_t i
    cdef int it = 0
    cdef double x = float(x0[0])
    cdef double y = float(x0[1])
    cdef double bx = x, by = y, best_viol = INFINITY, checkpoint = INFINITY
    cdef double dx, dy, d2, d, viol, f, sx, sy, num, den, lam, tx, ty
    for it in range(1, max_iter + 1):
        viol = 0.0
        sx = 0.0
        sy = 0.0
        num = 0.0
        for i in range(m):
            dx = x - c[i, 0]
            dy = y - c[i, 1]
            d2 = dx * dx + dy * dy
            if d2 - b[i] > viol:
                viol = d2 - b[i]
            if d2 > b[i]:
                d = sqrt(d2)
                f = 1.0 - sqrt(b[i]) / d
                tx = -dx * f
                ty = -dy * f
                sx += tx
                sy += ty
                num += tx * tx + ty * ty
        if viol < best_viol:
            best_viol = viol
            bx = x
            by = y
        if viol <= tol:
            break
        if it % STALL_WINDOW == 0:
            if best_viol > STALL_RATIO * checkpoint:
                break
            checkpoint = best_viol
        sx /= m
        sy /= m
        num /= m
        den = sx * sx + sy * sy
        if den == 0.0:
            break
        lam = num / den
        if lam > 1e4:
            lam = 1e4
        x += lam * sx
        y += lam * sy
    return np.array([bx, by]), best_viol, it
