"""Regularized least-squares kernel regression.

The fit minimizes ``sum_i w_i (f(x_i) - y_i)^2 + lam ||f||_H^2`` over the
RKHS. With ``f = sum_j c_j K(x_j, .)`` and ``S = diag(sqrt(w))`` the
coefficients are ``c = S (S G S + lam I)^{-1} S y``; for uniform weights
``w_i = 1/n`` this is the usual ``(G + n lam I) c = y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NumericalError
from .kernel import RadialKernel, gram

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-6, 0, 25))


@dataclass(frozen=True)
class LabeledSample:
    xs: np.ndarray
    ys: np.ndarray
    M: float = 1.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim == 1:
            xs = xs[:, None]
        ys = np.asarray(self.ys, dtype=float).reshape(-1)
        if xs.ndim != 2 or xs.shape[0] != ys.shape[0]:
            raise ValueError("xs must be (n, D) with one target per row")
        if xs.shape[0] == 0:
            raise ValueError("empty sample")
        if not self.M > 0:
            raise ValueError("output bound M must be positive")
        if np.any(np.abs(ys) > self.M * (1 + 1e-12)):
            raise ValueError(f"targets exceed the output bound M={self.M}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    def subset(self, idx) -> "LabeledSample":
        return LabeledSample(self.xs[idx], self.ys[idx], self.M)


@dataclass(frozen=True)
class KrrFit:
    support_points: np.ndarray
    coefficients: np.ndarray
    lam: float
    kernel: RadialKernel
    clip_level: float
    rkhs_norm_cache: float
    targets: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    jitter_applied: float = 0.0

    def predict(self, x) -> np.ndarray | float:
        return predict(self, x)

    def predict_clipped(self, x) -> np.ndarray | float:
        return predict_clipped(self, x)

    @property
    def rkhs_norm(self) -> float:
        return self.rkhs_norm_cache


def fit(kernel: RadialKernel, sample: LabeledSample, lam: float, weights=None) -> KrrFit:
    """Fit the regularized kernel regressor; uniform weights unless given."""
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be positive, got {lam}")
    n = sample.n
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != n or np.any(w < 0):
            raise ValueError("weights must be nonnegative, one per sample")
        w = w / w.sum()
    g = gram(kernel, sample.xs)
    coef, jitter = _solve(g.entries, w, sample.ys, lam)
    quad = float(coef @ g.entries @ coef)
    return KrrFit(
        support_points=sample.xs,
        coefficients=coef,
        lam=float(lam),
        kernel=kernel,
        clip_level=sample.M,
        rkhs_norm_cache=math.sqrt(max(quad, 0.0)),
        targets=sample.ys,
        weights=w,
        jitter_applied=jitter,
    )


def _solve(G, w, y, lam):
    s = np.sqrt(w)
    A = s[:, None] * G * s[None, :]
    A[np.diag_indices_from(A)] += lam
    rhs = s * y
    jitter = 0.0
    try:
        return s * cho_solve(cho_factor(A, lower=True), rhs), jitter
    except LinAlgError:
        pass
    jitter = 1e-10 * float(np.max(np.diag(A)))
    A[np.diag_indices_from(A)] += jitter
    try:
        return s * cho_solve(cho_factor(A, lower=True), rhs), jitter
    except LinAlgError:
        pass
    A[np.diag_indices_from(A)] -= jitter
    try:
        vals, vecs = np.linalg.eigh(A)
    except LinAlgError as exc:
        raise NumericalError("kernel system could not be solved") from exc
    cutoff = 1e-12 * max(abs(vals).max(), 1.0)
    inv = np.where(np.abs(vals) > cutoff, 1.0 / np.where(vals == 0, 1, vals), 0.0)
    return s * (vecs @ (inv * (vecs.T @ rhs))), jitter


def _check_dims(fit_: KrrFit, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != fit_.support_points.shape[1]:
        raise ValueError(
            f"dimension mismatch: fit on D={fit_.support_points.shape[1]}, "
            f"got {arr.shape[1]}"
        )
    return arr, single


def predict(fit_: KrrFit, x) -> np.ndarray | float:
    """Representer expansion sum_i c_i K(X_i, x); vectorized over rows."""
    arr, single = _check_dims(fit_, x)
    out = fit_.kernel.matrix(arr, fit_.support_points) @ fit_.coefficients
    return float(out[0]) if single else out


def predict_clipped(fit_: KrrFit, x) -> np.ndarray | float:
    m = fit_.clip_level
    out = np.clip(predict(fit_, x), -m, m)
    return float(out) if np.ndim(out) == 0 else out


def rkhs_norm(fit_: KrrFit) -> float:
    return fit_.rkhs_norm_cache


def representer_residual(fit_: KrrFit) -> float:
    """Relative residual of the normal equations at the fitted coefficients.

    Uniform weights reduce to ``||(G + n lam I) c - y|| / ||y||``.
    """
    G = gram(fit_.kernel, fit_.support_points).entries
    w = fit_.weights
    r = w * (G @ fit_.coefficients - fit_.targets) + fit_.lam * fit_.coefficients
    # rescale to the (G + n lam I) c = y convention when weights are uniform
    scale = 1.0 / w.mean()
    ynorm = np.linalg.norm(fit_.targets)
    if ynorm == 0:
        return float(np.linalg.norm(r) * scale)
    return float(np.linalg.norm(r) * scale / ynorm)


def objective(fit_: KrrFit) -> float:
    preds = predict(fit_, fit_.support_points)
    return float(
        np.sum(fit_.weights * (preds - fit_.targets) ** 2) + fit_.lam * fit_.rkhs_norm**2
    )


def empirical_operator_eigs(kernel: RadialKernel, xs) -> np.ndarray:
    """Eigenvalues of G/n in non-increasing order, clamped at 0."""
    xs = np.asarray(xs, dtype=float)
    n = xs.shape[0]
    try:
        vals = np.linalg.eigvalsh(gram(kernel, xs).entries / n)
    except LinAlgError as exc:
        raise NumericalError("Gram eigendecomposition failed") from exc
    return np.clip(vals[::-1], 0.0, None)


def effective_dimension(kernel: RadialKernel, xs, lam: float) -> float:
    """Empirical trace Tr((T + lam)^{-1} T) with T estimated by G/n."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    mu = empirical_operator_eigs(kernel, xs)
    return float(np.sum(mu / (mu + lam)))


def operator_norm_estimate(kernel: RadialKernel, xs) -> float:
    """Largest eigenvalue of G/n, the plug-in for the operator norm of T."""
    return float(empirical_operator_eigs(kernel, xs)[0])


def sample_size_check(n: int, lam: float, eta: float, n_eff: float, c1: float) -> bool:
    """lam <= c1 and n >= 64 log^2(6/eta) n_eff / lam."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if n <= 0 or lam > c1:
        return False
    return n >= 64.0 * math.log(6.0 / eta) ** 2 * n_eff / lam


@dataclass
class CVResult:
    lambda_star: float
    lambdas: np.ndarray
    mean_mse: np.ndarray
    table: list[tuple[float, int, float]]
    folds: int
    seed: int

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("lambda,fold,mse\n")
            for lam, fold, mse in self.table:
                fh.write(f"{lam:.17g},{fold},{mse:.17g}\n")


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def cross_validate(
    kernel: RadialKernel,
    sample: LabeledSample,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    folds: int = 5,
    seed: int = 0,
) -> CVResult:
    """k-fold CV of the clipped predictor over a lambda grid.

    One eigendecomposition per fold serves the whole grid. Ties go to the
    larger lambda.
    """
    lams = np.asarray(lambda_grid, dtype=float).reshape(-1)
    if lams.size == 0:
        raise ValueError("lambda grid is empty")
    if np.any(lams <= 0):
        raise ValueError("lambda grid must be positive")
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if sample.n < folds:
        raise ValueError(f"n={sample.n} is smaller than folds={folds}")
    parts = fold_indices(sample.n, folds, seed)
    K = gram(kernel, sample.xs).entries
    errs = np.zeros((folds, lams.size))
    for f, held in enumerate(parts):
        train = np.setdiff1d(np.arange(sample.n), held, assume_unique=True)
        ntr = train.size
        try:
            vals, vecs = np.linalg.eigh(K[np.ix_(train, train)])
        except LinAlgError as exc:
            raise NumericalError("fold Gram eigendecomposition failed") from exc
        vals = np.clip(vals, 0.0, None)
        proj = K[np.ix_(held, train)] @ vecs
        z = vecs.T @ sample.ys[train]
        preds = proj @ (z[:, None] / (vals[:, None] + ntr * lams[None, :]))
        preds = np.clip(preds, -sample.M, sample.M)
        errs[f] = np.mean((preds - sample.ys[held][:, None]) ** 2, axis=0)
    mean = errs.mean(axis=0)
    best = mean.min()
    ties = np.flatnonzero(mean <= best + 1e-12 * max(best, 1e-300))
    lam_star = float(lams[ties].max())
    table = [(float(lams[j]), f, float(errs[f, j])) for j in range(lams.size) for f in range(folds)]
    return CVResult(lam_star, lams, mean, table, folds, seed)
