"""Evaluators for the stability and error bounds of the two-step estimator.

Unknown constants of the error bounds (C_l, C_pca, ...) are plain inputs;
only their rate exponents are meaningful.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import krr
from .kernel import RadialKernel, gram
from .spectral import DiscreteMeasure
from .transport import w1_discrete


@dataclass(frozen=True)
class EstimatorConstants:
    L: float
    M: float
    M_lambda: float
    L_lambda: float
    B_lambda: float


def estimator_constants(fit: krr.KrrFit, L: float, M: float, clipped: bool = False) -> EstimatorConstants:
    """Sup bound, Lipschitz bound and B_lambda of a fit, all via ||f||_H.

    ``clipped`` caps the sup bound at M; the stability bound itself is for
    the unclipped fit, so the default leaves it at ||f||_H.
    """
    norm = fit.rkhs_norm
    m_lam = min(norm, M) if clipped else norm
    l_lam = L * norm
    b_lam = max(1.0, L * M) + L * m_lam + l_lam
    return EstimatorConstants(L, M, m_lam, l_lam, b_lam)


def stability_bound(constants: EstimatorConstants, lam: float, w1: float) -> float:
    """B_lambda * W1 / sqrt(lambda)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return constants.B_lambda * w1 / math.sqrt(lam)


def _as_measure(rho) -> DiscreteMeasure:
    if isinstance(rho, DiscreteMeasure):
        return rho
    return DiscreteMeasure.uniform(np.asarray(rho, dtype=float))


@dataclass(frozen=True)
class PreconditionResult:
    norm_estimate: float
    ok: bool


def operator_precondition(kernel: RadialKernel, rho1, rho3, lam: float) -> PreconditionResult:
    """||(T3 - T1)(T3 + lam)^{-1}|| on the span of K(z, .) over both supports.

    Both operators map H into that span and vanish on its complement, so
    the finite-rank computation is exact. In span coordinates with Gram
    matrix G the operator is similar to
    ``G^1/2 (W3 - W1) G^1/2 (G^1/2 W3 G^1/2 + lam)^{-1}``, which needs no
    inverse of G (a singular Gram is harmless).
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    m1, m3 = _as_measure(rho1), _as_measure(rho3)
    pts = np.vstack([m1.points, m3.points])
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    w1 = np.zeros(uniq.shape[0])
    w3 = np.zeros(uniq.shape[0])
    np.add.at(w1, inv[: m1.size], m1.weights)
    np.add.at(w3, inv[m1.size :], m3.weights)
    G = gram(kernel, uniq).entries
    vals, vecs = np.linalg.eigh(G)
    half = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    A3 = half @ (w3[:, None] * half)
    diff = half @ ((w3 - w1)[:, None] * half)
    A3[np.diag_indices_from(A3)] += lam
    op = np.linalg.solve(A3.T, diff.T).T
    norm = float(np.linalg.norm(op, 2)) if np.any(w3 != w1) else 0.0
    return PreconditionResult(norm, norm <= 0.5)


def l2_distance(f1, f2, eval_measure: DiscreteMeasure) -> float:
    """sqrt(sum_i w_i (f1(x_i) - f2(x_i))^2) for predictors taking (m, D) arrays."""
    a = np.asarray(_call(f1, eval_measure.points), dtype=float)
    b = np.asarray(_call(f2, eval_measure.points), dtype=float)
    return float(math.sqrt(max(np.sum(eval_measure.weights * (a - b) ** 2), 0.0)))


def _call(f, pts):
    if isinstance(f, krr.KrrFit):
        return krr.predict(f, pts)
    return f(pts)


@dataclass
class StabilityReport:
    lhs: float
    rhs: float
    w1: float
    lam: float
    b_constants: EstimatorConstants
    precondition_norm: float
    precondition_ok: bool
    holds: bool
    assumption_violated: bool
    kernel: str

    def to_dict(self) -> dict:
        out = asdict(self)
        out["b_constants"] = asdict(self.b_constants)
        return out

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v

        d = self.to_dict()
        d["b_constants"] = {k: clean(v) for k, v in d["b_constants"].items()}
        return json.dumps({k: clean(v) for k, v in d.items()}, sort_keys=True)


def weighted_fit(kernel: RadialKernel, rho: DiscreteMeasure, lam: float, M: float) -> krr.KrrFit:
    """f_{lam,rho} for a labeled discrete measure."""
    if rho.labels is None:
        raise ValueError("regression needs a labeled measure")
    sample = krr.LabeledSample(rho.points, rho.labels, M)
    return krr.fit(kernel, sample, lam, weights=rho.weights)


def verify_stability(
    kernel: RadialKernel,
    rho1: DiscreteMeasure,
    rho2: DiscreteMeasure,
    rho3: DiscreteMeasure,
    lam: float,
    L: float | None = None,
    M: float = 1.0,
) -> StabilityReport:
    """Evaluate both sides of the Wasserstein stability inequality.

    ``L`` defaults to the kernel's growth constant (infinite, and flagged,
    for kernels without quadratic growth at the origin).
    """
    f1 = weighted_fit(kernel, rho1, lam, M)
    f2 = weighted_fit(kernel, rho2, lam, M)
    w1 = w1_discrete(rho1, rho2, "mixed_xy")
    L_eff = kernel.lipschitz_constant if L is None else float(L)
    consts = estimator_constants(f2, L_eff, M)
    pre = operator_precondition(kernel, rho1, rho3, lam)
    lhs = l2_distance(f1, f2, rho3)
    rhs = stability_bound(consts, lam, w1) if w1 > 0 else 0.0
    holds = bool(lhs <= rhs + 1e-9) if pre.ok else False
    return StabilityReport(
        lhs=lhs,
        rhs=rhs,
        w1=w1,
        lam=float(lam),
        b_constants=consts,
        precondition_norm=pre.norm_estimate,
        precondition_ok=pre.ok,
        holds=holds,
        assumption_violated=not kernel.satisfies_growth,
        kernel=kernel.spec(),
    )


def gamma_constant(c_pca: float, gap: float) -> float:
    """3 C_pca / |sigma_d - sigma_{d+1}| (absolute gap, see module notes)."""
    return 3.0 * c_pca / abs(gap)


def _kernel_term(c_l, eta, lam, n, alpha, beta):
    return c_l * math.log(9.0 / eta) * (
        lam**beta + 1.0 / (lam**alpha * n) + lam**beta / n + 1.0 / n
    )


def overall_error_bound(
    gamma: float,
    s: float,
    b_lambda: float,
    l_lambda: float,
    lam: float,
    n: int,
    eta: float,
    alpha: float,
    beta: float,
    c_l: float = 1.0,
) -> float:
    """Squared L2 error bound of the clipped two-step estimator (prob. 1 - eta)."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    pca_lip = gamma * l_lambda**2 / (eta**2 * n)
    pca_stab = gamma**2 * s**2 * b_lambda**2 / (eta**2 * n * lam)
    return 3.0 * (pca_lip + pca_stab + _kernel_term(c_l, eta, lam, n, alpha, beta))


def semi_supervised_error_bound(
    t: float,
    s: float,
    b_lambda: float,
    l_lambda: float,
    lam: float,
    n: int,
    m: int,
    eta: float,
    alpha: float,
    beta: float,
    c_l: float = 1.0,
) -> float:
    """Same bound with the PCA map estimated from m >= n inputs."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    pca_lip = t**2 * l_lambda**2 / (eta**2 * m)
    pca_stab = t**2 * s**2 * b_lambda**2 / (eta**2 * m * lam)
    return 3.0 * (pca_lip + pca_stab + _kernel_term(c_l, eta, lam, n, alpha, beta))


def kernel_rate_bound(lam: float, n: int, alpha: float, beta: float, tau: float, c_l: float = 1.0) -> float:
    """C_l tau (lam^beta + 1/(lam^alpha n) + lam^beta/n + 1/n), prob. 1 - 3 exp(-tau)."""
    return c_l * tau * (lam**beta + 1.0 / (lam**alpha * n) + lam**beta / n + 1.0 / n)


@dataclass(frozen=True)
class RateChoice:
    lam: float
    exponent: float
    regime: str
    variable: str
    exponent_in_n: float


def optimal_lambda(
    n: int, alpha: float, beta: float, m: float | None = None, direct: bool = False
) -> RateChoice:
    """Rate-optimal lambda and squared-error rate exponent.

    ``direct``: KRR on the raw inputs, lambda = n^{-1/(beta+alpha)}.
    Otherwise the two-step estimator with PCA fitted on ``m`` inputs
    (default m = n): if m > n^{(1+beta)/(beta+alpha)} the kernel step
    dominates and lambda = n^{-1/(beta+alpha)}; else lambda =
    m^{-1/(1+beta)} with rate exponent beta/(beta+1) in m.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not (0 < alpha <= 1 and 0 < beta <= 1):
        raise ValueError("need alpha in (0, 1] and beta in (0, 1]")
    fast = beta / (beta + alpha)
    if direct:
        return RateChoice(n ** (-1.0 / (beta + alpha)), fast, "direct", "n", fast)
    m_eff = float(n if m is None else m)
    if m_eff < n:
        raise ValueError("m must be at least n")
    if math.isinf(m_eff) or m_eff > n ** ((1.0 + beta) / (beta + alpha)):
        return RateChoice(n ** (-1.0 / (beta + alpha)), fast, "kernel_dominated", "n", fast)
    slow = beta / (beta + 1.0)
    in_n = slow * math.log(m_eff) / math.log(n) if n > 1 else slow
    regime = "two_step" if m_eff == n else "pca_dominated"
    return RateChoice(m_eff ** (-1.0 / (1.0 + beta)), slow, regime, "m", in_n)
