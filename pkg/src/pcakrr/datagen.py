"""Synthetic data: a rotated box that is thin in all but d directions.

X = Q Xt with Xt uniform on [-1, 1]^d x [-eps, eps]^(D-d) and Q a seeded
random rotation. Labels are Y = f(P X) + U (case1) or Y = f(X) + U (case2)
with U uniform on [-h, h], h = ``noise_halfwidth``.

Randomness comes from numpy's PCG64 generator. Inputs and noise use two
independent streams spawned from ``sample_seed`` so both cases can share
the same X draws.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .pca import Projection

PRNG_NAME = "numpy.random.PCG64 (SeedSequence streams: x=0, noise=1, extra=2)"
CASES = ("case1", "case2")
TARGETS = ("f1", "f2")


@dataclass(frozen=True)
class GenConfig:
    d: int = 2
    D: int = 10
    epsilon: float = 0.1
    case: str = "case1"
    target_fn: str = "f1"
    noise_halfwidth: float = 0.1
    rotation_seed: int | None = 0
    sample_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.d < self.D:
            raise ValueError(f"need 1 <= d < D, got d={self.d}, D={self.D}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.noise_halfwidth < 0:
            raise ValueError("noise half-width must be nonnegative")
        if self.case not in CASES:
            raise ValueError(f"case must be one of {CASES}")
        if self.target_fn not in TARGETS:
            raise ValueError(f"target_fn must be one of {TARGETS}")

    @property
    def output_bound(self) -> float:
        return 1.0 + self.noise_halfwidth

    @property
    def noise_variance(self) -> float:
        return self.noise_halfwidth**2 / 3.0

    def with_seed(self, sample_seed: int) -> "GenConfig":
        return replace(self, sample_seed=sample_seed)

    def snapshot(self) -> dict:
        return asdict(self)


def random_rotation(D: int, seed: int | None) -> np.ndarray:
    """Seeded orthogonal matrix with determinant +1 (identity for seed None)."""
    if seed is None:
        return np.eye(D)
    z = np.random.default_rng(seed).standard_normal((D, D))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    x_ss, noise_ss, extra_ss = ss.spawn(3)
    return (
        np.random.Generator(np.random.PCG64(x_ss)),
        np.random.Generator(np.random.PCG64(noise_ss)),
        np.random.Generator(np.random.PCG64(extra_ss)),
    )


def box_halfwidths(config: GenConfig) -> np.ndarray:
    return np.r_[np.ones(config.d), np.full(config.D - config.d, config.epsilon)]


def covariance(config: GenConfig) -> np.ndarray:
    """Population covariance Q diag(1/3, ..., eps^2/3, ...) Q^T."""
    q = random_rotation(config.D, config.rotation_seed)
    return (q * (box_halfwidths(config) ** 2 / 3.0)) @ q.T


def gen_x(config: GenConfig, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """n inputs from the rotated box (rows are points)."""
    if rng is None:
        rng = _streams(config.sample_seed)[0]
    q = random_rotation(config.D, config.rotation_seed)
    xt = rng.uniform(-1.0, 1.0, size=(n, config.D)) * box_halfwidths(config)
    return xt @ q.T


def target_f1(x) -> np.ndarray:
    """sin(sum_i x_i), row-wise."""
    return np.sin(np.sum(np.atleast_2d(x), axis=1))


def target_f2(x) -> np.ndarray:
    """|sin(2 sum_i x_i)|, row-wise."""
    return np.abs(np.sin(2.0 * np.sum(np.atleast_2d(x), axis=1)))


def target(config: GenConfig):
    return target_f1 if config.target_fn == "f1" else target_f2


def true_projection(config: GenConfig) -> Projection:
    """Projector onto the rotated first-d coordinate plane."""
    q = random_rotation(config.D, config.rotation_seed)
    evals = box_halfwidths(config) ** 2 / 3.0
    return Projection(q[:, : config.d].T.copy(), evals, np.zeros(config.D))


def gen_y(
    config: GenConfig, xs, projection: Projection | None = None, rng: np.random.Generator | None = None
) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if rng is None:
        rng = _streams(config.sample_seed)[1]
    f = target(config)
    if config.case == "case1":
        if projection is None:
            raise ValueError("case1 labels need the true projection")
        clean = f(projection.project(xs))
    else:
        clean = f(xs)
    h = config.noise_halfwidth
    noise = rng.uniform(-h, h, size=xs.shape[0]) if h > 0 else np.zeros(xs.shape[0])
    return clean + noise


def sample(config: GenConfig, n: int, n_extra: int = 0):
    """Labeled pairs (X, Y) plus ``n_extra`` unlabeled inputs from a third stream."""
    x_rng, noise_rng, extra_rng = _streams(config.sample_seed)
    xs = gen_x(config, n, x_rng)
    ys = gen_y(config, xs, true_projection(config), noise_rng)
    if n_extra:
        return xs, ys, gen_x(config, n_extra, extra_rng)
    return xs, ys


def regression_function(config: GenConfig, xs) -> np.ndarray:
    """E[Y | X = x]."""
    xs = np.asarray(xs, dtype=float)
    f = target(config)
    if config.case == "case1":
        return f(true_projection(config).project(xs))
    return f(xs)


def _tail_frequencies(config: GenConfig) -> np.ndarray:
    # sum_i x_i = v . xt with v = Q^T 1; the tail coordinates enter via v[d:]
    q = random_rotation(config.D, config.rotation_seed)
    return (q.T @ np.ones(config.D))[config.d :]


def _sinc(t):
    return np.sinc(t / math.pi)


def conditional_mean_case2(config: GenConfig, z, n_terms: int = 4000) -> np.ndarray:
    """E[f(X) | P X = z] for case2 inputs; z are projected points in R^D.

    With a = sum(z) and independent tail coordinates, f1 gives
    sin(a) * prod_i sin(v_i eps)/(v_i eps). For f2 the cosine series
    |sin t| = 2/pi - 4/pi sum_k cos(2kt)/(4k^2 - 1) is averaged term by
    term the same way (truncation error below 4/(pi n_terms)).
    """
    a = np.sum(np.atleast_2d(np.asarray(z, dtype=float)), axis=1)
    v = _tail_frequencies(config)
    eps = config.epsilon
    if config.target_fn == "f1":
        return np.sin(a) * np.prod(_sinc(v * eps))
    k = np.arange(1, n_terms + 1, dtype=float)
    damp = np.prod(_sinc(4.0 * k[:, None] * v[None, :] * eps), axis=1)
    coef = damp / (4.0 * k * k - 1.0)
    out = np.empty(a.shape[0])
    for start in range(0, a.shape[0], 512):
        chunk = a[start : start + 512]
        out[start : start + 512] = 2.0 / math.pi - (4.0 / math.pi) * (
            np.cos(4.0 * chunk[:, None] * k[None, :]) @ coef
        )
    return out


def reduced_regression_function(config: GenConfig, z) -> np.ndarray:
    """f of the reduced problem evaluated at projected points z."""
    if config.case == "case1":
        return target(config)(np.atleast_2d(np.asarray(z, dtype=float)))
    return conditional_mean_case2(config, z)


def write_dataset_csv(xs, ys, path) -> None:
    xs = np.asarray(xs, dtype=float)
    D = xs.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join([f"x_{i + 1}" for i in range(D)] + ["y"]) + "\n")
        for row, y in zip(xs, ys):
            fh.write(",".join(f"{v:.17g}" for v in (*row, y)) + "\n")
