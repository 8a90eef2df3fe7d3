# Compiled kernels: radial kernel matrices and dense linear assignment.
# Semantics must match pcakrr._fallback exactly; see tests/test_backend.py.

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, INFINITY

cnp.import_array()

ctypedef cnp.float64_t f64


cdef inline double _profile(int code, double r) noexcept nogil:
    cdef double t
    if code == 0:
        return exp(-r * r)
    if r >= 1.0:
        return 0.0
    t = 1.0 - r
    if code == 1:
        t = t * t
        t = t * t
        return t * t * (8.0 * r + 1.0)
    if code == 2:
        t = t * t * t
        return t * t
    return t


def radial_matrix(const f64[:, ::1] xs, const f64[:, ::1] ys, int code, double gamma):
    """Matrix of phi(gamma * |x_i - y_j|) for profile `code`."""
    cdef Py_ssize_t n = xs.shape[0], m = ys.shape[0], dim = xs.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    if ys.shape[1] != dim:
        raise ValueError("dimension mismatch")
    out = np.empty((n, m), dtype=np.float64)
    cdef f64[:, ::1] res = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(dim):
                    diff = xs[i, k] - ys[j, k]
                    acc = acc + diff * diff
                res[i, j] = _profile(code, gamma * sqrt(acc))
    return out


def linear_assignment(const f64[:, ::1] cost):
    """Minimum-cost perfect matching on a square matrix.

    Shortest augmenting path with dual potentials, O(n^3). Returns the
    column assigned to each row.
    """
    cdef Py_ssize_t n = cost.shape[0]
    if cost.shape[1] != n:
        raise ValueError("cost matrix must be square")
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(n + 1)
    minv_arr = np.empty(n + 1)
    p_arr = np.zeros(n + 1, dtype=np.intp)
    way_arr = np.zeros(n + 1, dtype=np.intp)
    used_arr = np.zeros(n + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr, v = v_arr, minv = minv_arr
    cdef Py_ssize_t[::1] p = p_arr, way = way_arr
    cdef unsigned char[::1] used = used_arr
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while True:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
                if j0 == 0:
                    break
    cols = np.empty(n, dtype=np.intp)
    for j in range(1, n + 1):
        cols[p_arr[j] - 1] = j - 1
    return cols
