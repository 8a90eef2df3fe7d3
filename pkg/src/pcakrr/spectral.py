"""Spectra of kernel integral operators for finitely supported measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError

from .errors import NumericalError
from .kernel import RadialKernel, gram


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud, optionally carrying one label per atom."""

    points: np.ndarray
    weights: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[0] != w.shape[0]:
            raise ValueError("points must be (m, D) with one weight per atom")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {w.sum():.15g})")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=float).reshape(-1)
            if lab.shape[0] != w.shape[0]:
                raise ValueError("one label per atom required")
            object.__setattr__(self, "labels", lab)

    @classmethod
    def uniform(cls, points, labels=None) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=float)
        m = pts.shape[0]
        return cls(pts, np.full(m, 1.0 / m), labels)

    @classmethod
    def normalized(cls, points, weights, labels=None) -> "DiscreteMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(points, w / w.sum(), labels)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def integral_operator_eigs(kernel: RadialKernel, mu: DiscreteMeasure) -> np.ndarray:
    """Nonzero spectrum of L_{K,mu}: eigenvalues of W^1/2 G W^1/2, descending."""
    s = np.sqrt(mu.weights)
    G = gram(kernel, mu.points).entries
    try:
        vals = np.linalg.eigvalsh(s[:, None] * G * s[None, :])
    except LinAlgError as exc:
        raise NumericalError("operator eigendecomposition failed") from exc
    vals = vals[::-1]
    if vals[-1] < -1e-8:
        raise NumericalError(
            f"kernel {kernel.profile} is not positive semi-definite on this "
            f"support (eigenvalue {vals[-1]:.3e})"
        )
    return np.clip(vals, 0.0, None)


@dataclass(frozen=True)
class DecayFit:
    alpha: float
    slope: float
    r_squared: float
    n_points: int


def decay_exponent(eigenvalues, fit_range: tuple[int, int] | None = None) -> DecayFit:
    """Fit log sigma_n = c + s log n over 1-based indices; alpha = -1/s.

    The default range is [3, m/2], skipping the flat head and the tail.
    """
    sig = np.asarray(eigenvalues, dtype=float).reshape(-1)
    m = sig.size
    lo, hi = (3, m // 2) if fit_range is None else fit_range
    idx = np.arange(max(lo, 1), min(hi, m) + 1)
    vals = sig[idx - 1]
    keep = vals > 0
    idx, vals = idx[keep], vals[keep]
    if idx.size < 3:
        raise ValueError("need at least 3 positive eigenvalues in the fit range")
    lx, ly = np.log(idx), np.log(vals)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    alpha = -1.0 / slope if slope != 0 else float("inf")
    return DecayFit(float(alpha), float(slope), float(r2), int(idx.size))


def convolve_discrete(mu: DiscreteMeasure, kappa: DiscreteMeasure) -> DiscreteMeasure:
    """Law of X + U for independent X ~ mu, U ~ kappa; exact duplicates merged."""
    if mu.dim != kappa.dim:
        raise ValueError("measures live in different dimensions")
    pts = (mu.points[:, None, :] + kappa.points[None, :, :]).reshape(-1, mu.dim)
    w = (mu.weights[:, None] * kappa.weights[None, :]).reshape(-1)
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inv.reshape(-1), w)
    return DiscreteMeasure(uniq, merged / merged.sum())


@dataclass
class OrderingReport:
    sigma: np.ndarray
    gamma: np.ndarray
    sigma_hat: np.ndarray
    holds: bool
    max_violation: float


def check_ordering(sigma, gamma, sigma_hat, tol: float = 1e-8) -> OrderingReport:
    """Test sigma_hat_n >= max(sigma_n, gamma_n) - tol after zero padding."""
    length = max(len(sigma), len(gamma), len(sigma_hat))

    def pad(v):
        out = np.zeros(length)
        out[: len(v)] = v
        return out

    s, g, sh = pad(sigma), pad(gamma), pad(sigma_hat)
    viol = float(np.max(np.maximum(s, g) - sh))
    return OrderingReport(s, g, sh, viol <= tol, max(viol, 0.0))


def eigen_ordering_check(
    kernel: RadialKernel, mu: DiscreteMeasure, kappa: DiscreteMeasure, tol: float = 1e-8
) -> OrderingReport:
    """Compare spectra of L_{K,mu}, L_{K,kappa} and L_{K,mu*kappa}."""
    if not isinstance(kernel, RadialKernel):
        raise ValueError("ordering check requires a radial kernel")
    sigma = integral_operator_eigs(kernel, mu)
    gamma = integral_operator_eigs(kernel, kappa)
    sigma_hat = integral_operator_eigs(kernel, convolve_discrete(mu, kappa))
    return check_ordering(sigma, gamma, sigma_hat, tol)


def write_spectrum_csv(eigenvalues, path) -> None:
    with open(path, "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, v in enumerate(np.asarray(eigenvalues, dtype=float), start=1):
            fh.write(f"{i},{v:.17g}\n")
