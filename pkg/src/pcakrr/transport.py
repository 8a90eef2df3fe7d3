"""Exact Wasserstein-1 distances between discrete measures on X x Y.

The ground cost is ``|x1 - x2| + |y1 - y2|`` (``mixed_xy``) or
``|x1 - x2|`` (``x_only``).
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from . import _backend
from .errors import NumericalError
from .pca import Projection
from .spectral import DiscreteMeasure

COST_MODES = ("mixed_xy", "x_only")
MAX_LP_ATOMS = 64
MAX_BRUTE_FORCE = 8


def _check_cost(cost: str) -> None:
    if cost not in COST_MODES:
        raise ValueError(f"unknown cost {cost!r}; valid: {', '.join(COST_MODES)}")


def _as_2d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def cost_matrix(x1, x2, y1=None, y2=None, cost: str = "mixed_xy") -> np.ndarray:
    _check_cost(cost)
    a, b = _as_2d(x1), _as_2d(x2)
    if a.shape[1] != b.shape[1]:
        raise ValueError("point dimensions differ")
    c = cdist(a, b)
    if cost == "mixed_xy":
        if y1 is None or y2 is None:
            raise ValueError("mixed_xy cost needs labels on both sides")
        ya = np.asarray(y1, dtype=float).reshape(-1)
        yb = np.asarray(y2, dtype=float).reshape(-1)
        c = c + np.abs(ya[:, None] - yb[None, :])
    return c


def w1_equal_weight(x1, x2, y1=None, y2=None, cost: str = "mixed_xy", backend=None) -> float:
    """W1 between two n-point uniform empirical measures (optimal assignment)."""
    c = cost_matrix(x1, x2, y1, y2, cost)
    if c.shape[0] != c.shape[1]:
        raise ValueError(f"sizes differ: {c.shape[0]} vs {c.shape[1]}")
    cols = _backend.linear_assignment(c, backend)
    return float(c[np.arange(c.shape[0]), cols].mean())


def brute_force_w1(x1, x2, y1=None, y2=None, cost: str = "mixed_xy") -> float:
    """Minimum over all n! matchings; n <= 8."""
    c = cost_matrix(x1, x2, y1, y2, cost)
    n = c.shape[0]
    if c.shape[1] != n:
        raise ValueError(f"sizes differ: {n} vs {c.shape[1]}")
    if n > MAX_BRUTE_FORCE:
        raise ValueError(f"brute force refused for n={n} > {MAX_BRUTE_FORCE}")
    rows = np.arange(n)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        best = min(best, c[rows, list(perm)].sum())
    return float(best / n)


def _is_uniform(mu: DiscreteMeasure) -> bool:
    return bool(np.allclose(mu.weights, 1.0 / mu.size, rtol=0, atol=1e-15))


def w1_discrete(
    mu: DiscreteMeasure, nu: DiscreteMeasure, cost: str = "mixed_xy", method: str = "auto"
) -> float:
    """W1 between finitely supported measures.

    Equal-size uniform inputs go to the assignment solver under
    ``method="auto"``; otherwise the transportation LP is solved exactly
    (at most 64 atoms per side).
    """
    _check_cost(cost)
    for m in (mu, nu):
        if abs(m.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be normalized")
    c = cost_matrix(mu.points, nu.points, mu.labels, nu.labels, cost)
    if method == "auto" and mu.size == nu.size and _is_uniform(mu) and _is_uniform(nu):
        cols = _backend.linear_assignment(c)
        return float(c[np.arange(mu.size), cols].mean())
    if method not in ("auto", "lp"):
        raise ValueError(f"unknown method {method!r}")
    if max(mu.size, nu.size) > MAX_LP_ATOMS:
        raise ValueError(
            f"exact LP limited to {MAX_LP_ATOMS} atoms per side "
            f"(got {mu.size} x {nu.size})"
        )
    return _transport_lp(c, mu.weights, nu.weights)


def _transport_lp(c: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    m, n = c.shape
    rows = np.zeros((m, m * n))
    cols = np.zeros((n, m * n))
    for i in range(m):
        rows[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        cols[j, j::n] = 1.0
    # one marginal constraint is redundant; drop it for a full-rank system
    A_eq = np.vstack([rows, cols[:-1]])
    b_eq = np.concatenate([a, b[:-1]])
    res = linprog(c.reshape(-1), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise NumericalError(f"transport LP failed: {res.message}")
    return float(res.fun)


def perturbation_w1_bound(p1: Projection, p2: Projection, xs) -> float:
    """S ||P1 - P2||_op with S the mean norm of the sample."""
    xs = _as_2d(xs)
    S = float(np.mean(np.linalg.norm(xs, axis=1)))
    diff = p1.projector - p2.projector
    return S * float(np.linalg.norm(diff, 2))
