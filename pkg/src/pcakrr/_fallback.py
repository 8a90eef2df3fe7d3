"""Pure-Python/numpy versions of the compiled kernels in ``_core.pyx``."""

import numpy as np
from scipy.spatial.distance import cdist

PROFILE_CODES = {"gaussian": 0, "wendland_c2": 1, "wendland_c0": 2, "triangle": 3}


def profile_values(code, r):
    r = np.asarray(r, dtype=float)
    if code == 0:
        return np.exp(-r * r)
    t = np.clip(1.0 - r, 0.0, None)
    if code == 1:
        return t**8 * (8.0 * r + 1.0)
    if code == 2:
        return t**6
    if code == 3:
        return t
    raise ValueError(f"unknown profile code {code}")


def radial_matrix(xs, ys, code, gamma):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape[1] != ys.shape[1]:
        raise ValueError("dimension mismatch")
    return profile_values(code, gamma * cdist(xs, ys))


def linear_assignment(cost):
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.ndim != 2 or cost.shape[1] != n:
        raise ValueError("cost matrix must be square")
    # 1-based potentials; p[j] is the row matched to column j
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    rows = cost.tolist()
    inf = float("inf")
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = rows[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
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
        cols[p[j] - 1] = j - 1
    return cols
