"""Rank-d orthogonal projections estimated by PCA."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError

from .errors import NumericalError


@dataclass(frozen=True)
class Projection:
    """Orthogonal projection P = A^T A of rank d.

    ``basis`` holds A (d x D, orthonormal rows). ``eigenvalues`` are the D
    second-moment eigenvalues in non-increasing order; ``gap`` is
    sigma_d - sigma_{d+1}.
    """

    basis: np.ndarray
    eigenvalues: np.ndarray
    mean_used: np.ndarray
    gap_degenerate: bool = False

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis

    @property
    def gap(self) -> float:
        d = self.rank
        return float(self.eigenvalues[d - 1] - self.eigenvalues[d])

    def project(self, x) -> np.ndarray:
        return project(self, x)

    def reduce(self, x) -> np.ndarray:
        return reduce(self, x)


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    # columns: first nonzero coordinate positive
    out = vecs.copy()
    for j in range(out.shape[1]):
        nz = np.flatnonzero(np.abs(out[:, j]) > 1e-12)
        if nz.size and out[nz[0], j] < 0:
            out[:, j] = -out[:, j]
    return out


def fit_pca(xs, d: int, center: bool = False) -> Projection:
    """Top-d eigenspace of the empirical second-moment matrix.

    Without ``center`` the data are assumed centered (true mean 0).
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[0] < 1:
        raise ValueError("xs must be a nonempty (n, D) array")
    n, D = xs.shape
    if not 1 <= d < D:
        raise ValueError(f"need 1 <= d < D, got d={d}, D={D}")
    mean = xs.mean(axis=0) if center else np.zeros(D)
    xc = xs - mean
    cov = xc.T @ xc / n
    cov = 0.5 * (cov + cov.T)
    try:
        vals, vecs = np.linalg.eigh(cov)
    except LinAlgError as exc:
        raise NumericalError("covariance eigendecomposition failed") from exc
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = _sign_fix(vecs[:, order])
    if vals[-1] < -1e-10 * max(1.0, vals[0]):
        raise NumericalError("second-moment matrix has negative eigenvalues")
    vals = np.clip(vals, 0.0, None)
    degenerate = vals[d - 1] - vals[d] <= 1e-12 * max(vals[0], 1e-300)
    return Projection(vecs[:, :d].T.copy(), vals, mean, bool(degenerate))


def projection_from_basis(basis, eigenvalues=None, mean=None) -> Projection:
    """Projection onto the row space of ``basis`` (orthonormalized)."""
    a = np.atleast_2d(np.asarray(basis, dtype=float))
    q, _ = np.linalg.qr(a.T)
    d, D = a.shape
    evals = np.zeros(D) if eigenvalues is None else np.asarray(eigenvalues, dtype=float)
    mu = np.zeros(D) if mean is None else np.asarray(mean, dtype=float)
    return Projection(_sign_fix(q).T.copy(), evals, mu)


def _points(p: Projection, x):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != p.dim:
        raise ValueError(f"dimension mismatch: projection on D={p.dim}, got {arr.shape[1]}")
    return arr, single


def project(p: Projection, x) -> np.ndarray:
    arr, single = _points(p, x)
    out = (arr - p.mean_used) @ p.basis.T @ p.basis + p.mean_used
    return out[0] if single else out


def reduce(p: Projection, x) -> np.ndarray:
    arr, single = _points(p, x)
    out = (arr - p.mean_used) @ p.basis.T
    return out[0] if single else out


def reconstruction_error(p: Projection, xs) -> float:
    """Mean squared residual |x - project(x)|^2."""
    arr, _ = _points(p, xs)
    resid = arr - project(p, arr)
    return float(np.mean(np.sum(resid * resid, axis=1)))


def excess_reconstruction_error(p_hat: Projection, p_star: Projection, xs_eval) -> float:
    """R(p_hat) - R(p_star) on an evaluation sample; may be slightly negative."""
    if p_hat.dim != p_star.dim or p_hat.rank != p_star.rank:
        raise ValueError("projections must share D and d")
    arr, _ = _points(p_hat, xs_eval)
    # difference of quadratic forms avoids subtracting two nearly equal errors
    delta = p_star.projector - p_hat.projector
    xc = arr - p_hat.mean_used
    if np.any(p_hat.mean_used != p_star.mean_used):
        return reconstruction_error(p_hat, arr) - reconstruction_error(p_star, arr)
    return float(np.mean(np.einsum("ij,jk,ik->i", xc, delta, xc)))


def population_excess_error(p_hat: Projection, p_star: Projection, covariance) -> float:
    """Exact R(p_hat) - R(p_star) for a centered law with known covariance."""
    cov = np.asarray(covariance, dtype=float)
    return float(np.trace((p_star.projector - p_hat.projector) @ cov))


def projector_distance(p1: Projection, p2: Projection) -> tuple[float, float]:
    """(operator norm, Hilbert-Schmidt norm) of P1 - P2."""
    diff = p1.projector - p2.projector
    sv = np.linalg.svd(diff, compute_uv=False)
    return float(sv[0]), float(np.sqrt(np.sum(sv * sv)))


def structural_error_bound(lipschitz_L: float, eigenvalues, d: int) -> float:
    """2 L (sum_{i>d} sigma_i)^{1/2}."""
    tail = float(np.sum(np.clip(np.asarray(eigenvalues, dtype=float)[d:], 0.0, None)))
    return 2.0 * lipschitz_L * math.sqrt(tail)


def save_projection(p: Projection, path) -> None:
    """CSV rows: kind,index,values... for basis rows, eigenvalues and mean."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "index", *[f"v{j}" for j in range(p.dim)]])
        for i, row in enumerate(p.basis):
            w.writerow(["basis", i, *[repr(float(v)) for v in row]])
        w.writerow(["eigenvalues", 0, *[repr(float(v)) for v in p.eigenvalues]])
        w.writerow(["mean", 0, *[repr(float(v)) for v in p.mean_used]])


def load_projection(path) -> Projection:
    basis, evals, mean = [], None, None
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        for kind, _, *vals in rows:
            arr = [float(v) for v in vals]
            if kind == "basis":
                basis.append(arr)
            elif kind == "eigenvalues":
                evals = np.array(arr)
            elif kind == "mean":
                mean = np.array(arr)
            else:
                raise ValueError(f"unknown row kind {kind!r}")
    b = np.array(basis)
    d = b.shape[0]
    degenerate = evals[d - 1] - evals[d] <= 1e-12 * max(evals[0], 1e-300)
    return Projection(b, evals, mean, bool(degenerate))
