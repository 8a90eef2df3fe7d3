"""Radial kernels K(x, y) = phi(gamma |x - y|) with phi(0) = 1.

Profiles
--------
gaussian      exp(-r^2)                      C-infinity
wendland_c2   (1 - r)_+^8 (8 r + 1)          C2, positive definite up to R^13
wendland_c0   (1 - r)_+^6                    C0, positive definite up to R^11
triangle      (1 - r)_+                      C0, positive definite on R only

Only the first two satisfy the quadratic growth condition
``phi(0) - phi(r) <= L^2 r^2 / 2``; the compactly supported C0 profiles
have a linear deficit at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, LinAlgError

from . import _backend
from ._fallback import PROFILE_CODES

SMOOTHNESS = {
    "gaussian": "Cinf",
    "wendland_c2": "C2",
    "wendland_c0": "C0",
    "triangle": "C0",
}

# coefficients of (1 - r)^8 (8 r + 1), lowest order first; c0 = 1, c1 = 0
_C2_POLY = np.polynomial.polynomial.polymul(
    np.polynomial.polynomial.polypow([1.0, -1.0], 8), [1.0, 8.0]
)


@dataclass(frozen=True)
class RadialKernel:
    profile: str = "gaussian"
    gamma: float = 1.0

    def __post_init__(self):
        if self.profile not in PROFILE_CODES:
            raise ValueError(
                f"unknown kernel profile {self.profile!r}; "
                f"valid options: {', '.join(PROFILE_CODES)}"
            )
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"bandwidth must be positive, got {self.gamma}")

    @property
    def code(self) -> int:
        return PROFILE_CODES[self.profile]

    @property
    def smoothness_tag(self) -> str:
        return SMOOTHNESS[self.profile]

    @property
    def satisfies_growth(self) -> bool:
        """Whether phi(0) - phi(r) <= L^2 r^2 / 2 holds for a finite L."""
        return self.profile in ("gaussian", "wendland_c2")

    @property
    def lipschitz_constant(self) -> float:
        """Smallest L in the growth condition (inf when it fails)."""
        if self.profile == "gaussian":
            return math.sqrt(2.0) * self.gamma
        if self.profile == "wendland_c2":
            return math.sqrt(72.0) * self.gamma
        return math.inf

    def spec(self) -> str:
        return f"{self.profile}:gamma={self.gamma:g}"

    def phi(self, r):
        """Profile evaluated at gamma * r."""
        from ._fallback import profile_values

        return profile_values(self.code, self.gamma * np.asarray(r, dtype=float))

    def deficit(self, r):
        """phi(0) - phi(gamma r), evaluated without cancellation near 0."""
        s = self.gamma * np.asarray(r, dtype=float)
        if self.profile == "gaussian":
            return -np.expm1(-s * s)
        inside = s < 1.0
        sc = np.where(inside, s, 0.0)
        if self.profile == "wendland_c2":
            tail = np.polynomial.polynomial.polyval(sc, -_C2_POLY[2:])
            val = sc * sc * tail
        elif self.profile == "wendland_c0":
            val = -np.expm1(6.0 * np.log1p(-sc))
        else:
            val = sc
        return np.where(inside, val, 1.0)

    def __call__(self, x1, x2) -> float:
        return eval_kernel(self, x1, x2)

    def matrix(self, xs, ys=None, backend=None) -> np.ndarray:
        """Cross-kernel matrix K(xs_i, ys_j)."""
        xs = _as_points(xs)
        ys = xs if ys is None else _as_points(ys)
        if xs.shape[1] != ys.shape[1]:
            raise ValueError(
                f"dimension mismatch: {xs.shape[1]} vs {ys.shape[1]}"
            )
        return _backend.radial_matrix(xs, ys, self.code, self.gamma, backend)


@dataclass
class GramMatrix:
    entries: np.ndarray
    jitter_applied: float = 0.0

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def cholesky(self):
        """Cholesky factor, retrying once with 1e-10 * max diagonal jitter."""
        try:
            return cho_factor(self.entries, lower=True)
        except LinAlgError:
            pass
        jitter = 1e-10 * float(np.max(np.diag(self.entries)))
        self.entries = self.entries + jitter * np.eye(self.n)
        self.jitter_applied += jitter
        return cho_factor(self.entries, lower=True)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


def parse_kernel(spec: str) -> RadialKernel:
    """Parse ``"name"`` or ``"name:gamma=<float>"``."""
    name, _, rest = spec.strip().partition(":")
    gamma = 1.0
    if rest:
        key, eq, value = rest.partition("=")
        if key.strip() != "gamma" or not eq:
            raise ValueError(f"bad kernel option {rest!r}; expected gamma=<float>")
        try:
            gamma = float(value)
        except ValueError:
            raise ValueError(f"bad kernel bandwidth {value!r}") from None
    return RadialKernel(name.strip(), gamma)


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("expected a nonempty (n, D) array of points")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must have finite coordinates")
    return arr


def _as_point(x) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError("expected a single point")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point must have finite coordinates")
    return arr


def eval_kernel(kernel: RadialKernel, x1, x2) -> float:
    a, b = _as_point(x1), _as_point(x2)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(kernel.phi(np.linalg.norm(a - b)))


def gram(kernel: RadialKernel, points) -> GramMatrix:
    pts = _as_points(points)
    g = kernel.matrix(pts)
    # exact symmetry regardless of backend rounding
    g = 0.5 * (g + g.T)
    np.fill_diagonal(g, 1.0)
    return GramMatrix(g)


def lipschitz_feature_constant(kernel: RadialKernel, r_max: float, grid_size: int) -> float:
    """Numerical sup of sqrt(2 (phi(0) - phi(gamma r))) / r.

    The grid is geometric on [r_max / grid_size, r_max], so refining it
    also probes smaller radii; for kernels without quadratic growth at 0
    the estimate diverges as the grid is refined.
    """
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    r = np.geomspace(r_max / grid_size, r_max, grid_size)
    ratio = np.sqrt(2.0 * np.maximum(kernel.deficit(r), 0.0)) / r
    return float(ratio.max())


def feature_distance(kernel: RadialKernel, x1, x2) -> float:
    """RKHS distance ||K(x1, .) - K(x2, .)|| = sqrt(2 (phi(0) - phi(|x1 - x2|)))."""
    a, b = _as_point(x1), _as_point(x2)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    rad = 2.0 * float(kernel.deficit(np.linalg.norm(a - b)))
    if rad < -1e-12:
        raise ArithmeticError(
            f"negative feature radicand {rad:.3e}: profile is not maximal at 0"
        )
    return math.sqrt(max(rad, 0.0))
