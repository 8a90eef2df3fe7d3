"""Monte-Carlo harness for the PCA -> kernel regression experiments.

Every repetition is keyed by a seed derived from (base seed, n, rep), so
all kernels and estimators in one repetition see the same draws and any
row can be recomputed in isolation.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import datagen, krr
from .bounds import optimal_lambda
from .datagen import GenConfig
from .kernel import RadialKernel
from .pca import excess_reconstruction_error, fit_pca, population_excess_error
from .svgplot import line_plot

DEFAULT_N_GRID = (64, 128, 256, 512, 1024)
DEFAULT_REPS = 50
TEST_SIZE = 10_000

COMPARE_COLUMNS = ("estimator", "kernel", "case", "n", "m", "rep", "lambda", "mse")
PCA_RATE_COLUMNS = ("n", "rep", "excess_error")


def derive_seed(*keys: int) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x over positive pairs."""
    pairs = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pairs) < 2:
        return float("nan")
    lx, ly = np.array(pairs).T
    return float(np.polyfit(lx, ly, 1)[0])


def mean_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


@dataclass
class ExperimentReport:
    experiment_id: str
    columns: tuple
    rows: list = field(default_factory=list)
    config_snapshot: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    value: str = "mse"
    group_by: tuple = ("estimator", "kernel", "case", "n", "m")

    def aggregate(self) -> list[dict]:
        """Mean and standard error of ``value`` per group, in first-seen order."""
        groups: dict[tuple, list[float]] = {}
        for row in self.rows:
            key = tuple(row[k] for k in self.group_by)
            groups.setdefault(key, []).append(row[self.value])
        out = []
        for key, vals in groups.items():
            mean, se = mean_stderr(vals)
            out.append({**dict(zip(self.group_by, key)), "mean": mean, "stderr": se, "count": len(vals)})
        return out

    def lookup(self, **match) -> dict:
        hits = [a for a in self.aggregate() if all(a[k] == v for k, v in match.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} aggregate rows match {match}")
        return hits[0]

    def values(self, **match) -> np.ndarray:
        return np.array(
            [r[self.value] for r in self.rows if all(r[k] == v for k, v in match.items())]
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt(row[c]) for c in self.columns])

    def write(self, out_dir, plot: bool = True) -> dict:
        """CSV rows, aggregate CSV, JSON snapshot, timings and an SVG plot."""
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            "rows": os.path.join(out_dir, f"{self.experiment_id}.csv"),
            "aggregate": os.path.join(out_dir, f"{self.experiment_id}_aggregate.csv"),
            "snapshot": os.path.join(out_dir, f"{self.experiment_id}_config.json"),
            "timings": os.path.join(out_dir, f"{self.experiment_id}_timings.csv"),
        }
        self.write_csv(paths["rows"])
        agg = self.aggregate()
        with open(paths["aggregate"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            cols = [*self.group_by, "mean", "stderr", "count"]
            w.writerow(cols)
            for a in agg:
                w.writerow([_fmt(a[c]) for c in cols])
        with open(paths["snapshot"], "w") as fh:
            json.dump(
                {"experiment_id": self.experiment_id, "config": self.config_snapshot,
                 "extras": _jsonable(self.extras)},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
        with open(paths["timings"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*self.group_by, "rep", "wall_time"])
            for row in self.rows:
                w.writerow([*(row.get(k, "") for k in self.group_by), row.get("rep", ""),
                            f"{row.get('wall_time', 0.0):.6f}"])
        if plot:
            paths["plot"] = os.path.join(out_dir, f"{self.experiment_id}.svg")
            self.plot(paths["plot"])
        return paths

    def plot(self, path) -> None:
        x_key = "m" if self.experiment_id.startswith("semi") else "n"
        series: dict[str, tuple[list, list]] = {}
        for a in self.aggregate():
            label = " / ".join(
                str(a[k]) for k in self.group_by if k not in ("n", "m") and a[k] not in ("", "none")
            ) or self.value
            xs, ys = series.setdefault(label, ([], []))
            xs.append(a[x_key])
            ys.append(a["mean"])
        line_plot(series, path, title=self.experiment_id, xlabel=x_key,
                  ylabel=f"mean {self.value}", logx=True, logy=True)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.17g}"
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _run_jobs(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# ---------------------------------------------------------------- PCA rate


def _pca_rate_job(config: GenConfig, n: int, rep: int, seed: int, eval_size: int):
    cfg = config.with_seed(derive_seed(seed, n, rep))
    xs = datagen.gen_x(cfg, n)
    t0 = time.perf_counter()
    p_hat = fit_pca(xs, cfg.d)
    p_star = datagen.true_projection(cfg)
    x_eval = datagen.gen_x(cfg.with_seed(derive_seed(seed, n, rep, 1)), eval_size)
    excess = excess_reconstruction_error(p_hat, p_star, x_eval)
    exact = population_excess_error(p_hat, p_star, datagen.covariance(cfg))
    return {"n": n, "rep": rep, "excess_error": excess, "population_excess": exact,
            "wall_time": time.perf_counter() - t0}


def run_pca_rate(
    config: GenConfig,
    n_grid=tuple(2**k for k in range(4, 13)),
    reps: int = 200,
    seed: int = 0,
    eval_size: int = TEST_SIZE,
    workers: int = 1,
) -> ExperimentReport:
    """Excess reconstruction error of empirical PCA against n.

    Each repetition fits on n fresh inputs and evaluates the excess error
    on a fresh ``eval_size``-point sample; the exact population value from
    the known covariance is recorded alongside.
    """
    jobs = [(config, n, rep, seed, eval_size) for n in n_grid for rep in range(reps)]
    rows = _run_jobs(_pca_rate_job, jobs, workers)
    report = ExperimentReport(
        "pca_rate", PCA_RATE_COLUMNS, rows,
        config_snapshot=_snapshot(config, seed=seed, n_grid=list(n_grid), reps=reps, eval_size=eval_size),
        value="excess_error", group_by=("n",),
    )
    means = [report.lookup(n=n)["mean"] for n in n_grid]
    pop = [float(np.mean([r["population_excess"] for r in rows if r["n"] == n])) for n in n_grid]
    report.extras = {"slope": loglog_slope(n_grid, means), "population_slope": loglog_slope(n_grid, pop),
                     "population_means": pop}
    return report


# ------------------------------------------------------ estimator plumbing


@dataclass
class _Fitted:
    fit: krr.KrrFit
    lam: float


def _fit_cv(kernel, xs, ys, M, cv_seed, lambda_grid, folds) -> _Fitted:
    sample = krr.LabeledSample(xs, ys, M)
    cv = krr.cross_validate(kernel, sample, lambda_grid, folds, cv_seed)
    return _Fitted(krr.fit(kernel, sample, cv.lambda_star), cv.lambda_star)


def _mse(pred, y) -> float:
    return float(np.mean((np.asarray(pred) - y) ** 2))


def _snapshot(config: GenConfig, **extra) -> dict:
    return {"generator": config.snapshot(), "prng": datagen.PRNG_NAME, **extra}


def _draw(cfg: GenConfig, seed: int, n: int, rep: int, test_size: int, n_extra: int = 0):
    train_cfg = cfg.with_seed(derive_seed(seed, n, rep))
    drawn = datagen.sample(train_cfg, n, n_extra)
    test = datagen.sample(cfg.with_seed(derive_seed(seed, n, rep, 1)), test_size)
    return drawn, test


def _row(estimator, kernel, cfg, n, m, rep, lam, mse, wall):
    return {"estimator": estimator, "kernel": kernel, "case": cfg.case, "n": n, "m": m,
            "rep": rep, "lambda": lam, "mse": mse, "wall_time": wall}


# ------------------------------------------------------ error comparison


def _compare_job(cfg: GenConfig, kernel_specs, n, rep, seed, test_size, folds, lambda_grid):
    from .kernel import parse_kernel

    (xs, ys), (xt, yt) = _draw(cfg, seed, n, rep, test_size)
    M = cfg.output_bound
    p_star = datagen.true_projection(cfg)
    rows = []
    t0 = time.perf_counter()
    rows.append(_row("oracle_f_rho", "none", cfg, n, n, rep, float("nan"),
                     _mse(datagen.regression_function(cfg, xt), yt), time.perf_counter() - t0))
    t0 = time.perf_counter()
    rows.append(_row("oracle_f_rho_tilde_P", "none", cfg, n, n, rep, float("nan"),
                     _mse(datagen.reduced_regression_function(cfg, p_star.project(xt)), yt),
                     time.perf_counter() - t0))
    p_hat = fit_pca(xs, cfg.d)
    zs, zt = p_hat.reduce(xs), p_hat.reduce(xt)
    cv_seed = derive_seed(seed, n, rep, 2)
    for spec in kernel_specs:
        kernel = parse_kernel(spec)
        t0 = time.perf_counter()
        direct = _fit_cv(kernel, xs, ys, M, cv_seed, lambda_grid, folds)
        rows.append(_row("direct_krr", spec, cfg, n, n, rep, direct.lam,
                         _mse(krr.predict_clipped(direct.fit, xt), yt), time.perf_counter() - t0))
        t0 = time.perf_counter()
        two = _fit_cv(kernel, zs, ys, M, cv_seed, lambda_grid, folds)
        rows.append(_row("two_step", spec, cfg, n, n, rep, two.lam,
                         _mse(krr.predict_clipped(two.fit, zt), yt), time.perf_counter() - t0))
    return rows


def run_error_comparison(
    config: GenConfig,
    kernel_list=("gaussian", "wendland_c2", "wendland_c0"),
    n_grid=DEFAULT_N_GRID,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    test_size: int = TEST_SIZE,
    folds: int = 5,
    lambda_grid=krr.DEFAULT_LAMBDA_GRID,
    workers: int = 1,
    experiment_id: str = "compare",
) -> ExperimentReport:
    """Test MSE against y for the two oracles, direct KRR and the two-step fit."""
    kernel_list = tuple(kernel_list)
    jobs = [(config, kernel_list, n, rep, seed, test_size, folds, tuple(lambda_grid))
            for n in n_grid for rep in range(reps)]
    rows = [r for chunk in _run_jobs(_compare_job, jobs, workers) for r in chunk]
    return ExperimentReport(
        experiment_id, COMPARE_COLUMNS, rows,
        config_snapshot=_snapshot(config, seed=seed, kernels=list(kernel_list), n_grid=list(n_grid),
                                  reps=reps, test_size=test_size, cv_folds=folds,
                                  lambda_grid=[float(v) for v in lambda_grid]),
    )


def _excess_slope(report: ExperimentReport, estimator, reference, kernel, n_grid) -> float:
    ex = []
    for n in n_grid:
        est = report.lookup(estimator=estimator, kernel=kernel, n=n)["mean"]
        ref = report.lookup(estimator=reference, n=n)["mean"]
        ex.append(est - ref)
    return loglog_slope(n_grid, ex)


def run_irregular(
    config: GenConfig,
    kernel: str = "gaussian",
    n_grid=DEFAULT_N_GRID,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    **kwargs,
) -> ExperimentReport:
    """The comparison for the non-smooth target f2, plus empirical rate exponents.

    The exponents are log-log slopes of the excess MSE over the matching
    asymptotic estimator (f_rho for direct KRR, f_rho_tilde o P for the
    two-step fit).
    """
    from dataclasses import replace

    cfg = replace(config, target_fn="f2")
    report = run_error_comparison(cfg, (kernel,), n_grid, reps, seed,
                                  experiment_id=f"irregular_{cfg.case}", **kwargs)
    report.extras = rate_exponents(report, kernel, n_grid)
    return report


def rate_exponents(report: ExperimentReport, kernel: str, n_grid) -> dict:
    """Excess-MSE slopes of direct KRR and the two-step fit against n."""
    return {
        "rate_direct": _excess_slope(report, "direct_krr", "oracle_f_rho", kernel, n_grid),
        "rate_two_step": _excess_slope(report, "two_step", "oracle_f_rho_tilde_P", kernel, n_grid),
    }


# ------------------------------------------------------------ PCA oracle


def _pca_oracle_job(cfg, kernel_specs, n, rep, seed, test_size, folds, lambda_grid):
    from .kernel import parse_kernel

    (xs, ys), (xt, yt) = _draw(cfg, seed, n, rep, test_size)
    M = cfg.output_bound
    p_star = datagen.true_projection(cfg)
    p_hat = fit_pca(xs, cfg.d)
    cv_seed = derive_seed(seed, n, rep, 2)
    rows = []
    t0 = time.perf_counter()
    rows.append(_row("oracle_f_rho_tilde_P", "none", cfg, n, n, rep, float("nan"),
                     _mse(datagen.reduced_regression_function(cfg, p_star.project(xt)), yt),
                     time.perf_counter() - t0))
    for spec in kernel_specs:
        kernel = parse_kernel(spec)
        for name, proj in (("two_step", p_hat), ("krr_true_P", p_star)):
            t0 = time.perf_counter()
            f = _fit_cv(kernel, proj.reduce(xs), ys, M, cv_seed, lambda_grid, folds)
            rows.append(_row(name, spec, cfg, n, n, rep, f.lam,
                             _mse(krr.predict_clipped(f.fit, proj.reduce(xt)), yt),
                             time.perf_counter() - t0))
    return rows


def run_pca_oracle(
    config: GenConfig,
    kernel_list=("gaussian", "wendland_c2", "wendland_c0"),
    n_grid=DEFAULT_N_GRID,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    test_size: int = TEST_SIZE,
    folds: int = 5,
    lambda_grid=krr.DEFAULT_LAMBDA_GRID,
    workers: int = 1,
) -> ExperimentReport:
    """Two-step fit with estimated vs. true PCA map; the gap is the PCA cost."""
    kernel_list = tuple(kernel_list)
    jobs = [(config, kernel_list, n, rep, seed, test_size, folds, tuple(lambda_grid))
            for n in n_grid for rep in range(reps)]
    rows = [r for chunk in _run_jobs(_pca_oracle_job, jobs, workers) for r in chunk]
    report = ExperimentReport(
        "pca_oracle", COMPARE_COLUMNS, rows,
        config_snapshot=_snapshot(config, seed=seed, kernels=list(kernel_list), n_grid=list(n_grid),
                                  reps=reps, test_size=test_size, cv_folds=folds,
                                  lambda_grid=[float(v) for v in lambda_grid]),
    )
    report.extras = {"gap": {spec: pca_gap(report, spec, n_grid) for spec in kernel_list}}
    return report


def pca_gap(report: ExperimentReport, kernel: str, n_grid) -> list[dict]:
    """Per n: mean and paired standard error of MSE(two_step) - MSE(krr_true_P)."""
    out = []
    for n in n_grid:
        a = report.values(estimator="two_step", kernel=kernel, n=n)
        b = report.values(estimator="krr_true_P", kernel=kernel, n=n)
        mean, se = mean_stderr(a - b)
        total = float(a.mean())
        out.append({"n": n, "gap": mean, "stderr": se, "total": total})
    return out


# ------------------------------------------------------ semi-supervised


def _semi_job(cfg, kernel_spec, n, m_grid, rep, seed, test_size, folds, lambda_grid, alpha, beta):
    from .kernel import parse_kernel

    kernel = parse_kernel(kernel_spec)
    m_max = max(m_grid)
    drawn, (xt, yt) = _draw(cfg, seed, n, rep, test_size, n_extra=max(m_max - n, 0))
    xs, ys = drawn[0], drawn[1]
    x_all = np.vstack([xs, drawn[2]]) if m_max > n else xs
    M = cfg.output_bound
    cv_seed = derive_seed(seed, n, rep, 2)
    rows = []
    p_star = datagen.true_projection(cfg)
    t0 = time.perf_counter()
    ref = _fit_cv(kernel, p_star.reduce(xs), ys, M, cv_seed, lambda_grid, folds)
    ref_mse = _mse(krr.predict_clipped(ref.fit, p_star.reduce(xt)), yt)
    wall = time.perf_counter() - t0
    for m in m_grid:
        rows.append(_row("krr_true_P", kernel_spec, cfg, n, m, rep, ref.lam, ref_mse, wall))
        t0 = time.perf_counter()
        p_m = fit_pca(x_all[:m], cfg.d)
        zs, zt = p_m.reduce(xs), p_m.reduce(xt)
        cv = _fit_cv(kernel, zs, ys, M, cv_seed, lambda_grid, folds)
        rows.append(_row("two_step_cv", kernel_spec, cfg, n, m, rep, cv.lam,
                         _mse(krr.predict_clipped(cv.fit, zt), yt), time.perf_counter() - t0))
        t0 = time.perf_counter()
        lam = optimal_lambda(n, alpha, beta, m=m).lam
        rf = krr.fit(kernel, krr.LabeledSample(zs, ys, M), lam)
        rows.append(_row("two_step_rate", kernel_spec, cfg, n, m, rep, lam,
                         _mse(krr.predict_clipped(rf, zt), yt), time.perf_counter() - t0))
    return rows


def run_semi_supervised(
    config: GenConfig,
    n: int = 256,
    m_grid=(256, 1024, 4096),
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    kernel: str = "wendland_c2",
    alpha: float = 1.0,
    beta: float = 1.0,
    test_size: int = TEST_SIZE,
    folds: int = 5,
    lambda_grid=krr.DEFAULT_LAMBDA_GRID,
    workers: int = 1,
) -> ExperimentReport:
    """PCA on m inputs, regression on the first n of them (labeled).

    Inputs are nested across m within a repetition. Lambda is chosen by CV
    and, separately, by the rate rule with the given (alpha, beta).
    """
    if min(m_grid) < n:
        raise ValueError("every m must be at least n")
    jobs = [(config, kernel, n, tuple(m_grid), rep, seed, test_size, folds, tuple(lambda_grid), alpha, beta)
            for rep in range(reps)]
    rows = [r for chunk in _run_jobs(_semi_job, jobs, workers) for r in chunk]
    return ExperimentReport(
        "semi_supervised", COMPARE_COLUMNS, rows,
        config_snapshot=_snapshot(config, seed=seed, kernels=[kernel], n=n, m_grid=list(m_grid), reps=reps,
                                  alpha=alpha, beta=beta, test_size=test_size, cv_folds=folds,
                                  lambda_grid=[float(v) for v in lambda_grid]),
    )


# ------------------------------------------------------ error decomposition


@dataclass
class ErrorDecomposition:
    R1: float
    R2: float
    R3: float
    total: float
    bound: float
    holds: bool


def error_decomposition(
    config: GenConfig,
    n: int,
    rep_seed: int,
    kernel: RadialKernel,
    lam: float,
    eval_size: int = TEST_SIZE,
    projection=None,
) -> ErrorDecomposition:
    """Split the two-step error into PCA-Lipschitz, PCA-stability and kernel terms.

    R1 = |f_hat(P_hat x) - f_hat(P x)|, R2 = |f_hat(P x) - f(P x)|,
    R3 = |clip f(P x) - f_rho_tilde(P x)| in L2(rho_X), where f_hat is fit
    on P_hat X_i and f on P X_i (both in R^D). ``projection`` overrides
    P_hat (e.g. with the true map).
    """
    cfg = config.with_seed(rep_seed)
    xs, ys = datagen.sample(cfg, n)
    x_eval = datagen.gen_x(cfg.with_seed(derive_seed(rep_seed, 1)), eval_size)
    M = cfg.output_bound
    p_star = datagen.true_projection(cfg)
    p_hat = fit_pca(xs, cfg.d) if projection is None else projection
    f_hat = krr.fit(kernel, krr.LabeledSample(p_hat.project(xs), ys, M), lam)
    f_true = krr.fit(kernel, krr.LabeledSample(p_star.project(xs), ys, M), lam)
    px_hat, px = p_hat.project(x_eval), p_star.project(x_eval)
    fh_hat = krr.predict(f_hat, px_hat)
    fh_true = krr.predict(f_hat, px)
    f_on_p = krr.predict(f_true, px)
    target = datagen.reduced_regression_function(cfg, px)

    def l2(v):
        return float(math.sqrt(np.mean(v * v)))

    r1 = l2(fh_hat - fh_true)
    r2 = l2(fh_true - f_on_p)
    r3 = l2(np.clip(f_on_p, -M, M) - target)
    total = l2(np.clip(fh_hat, -M, M) - target)
    bound = math.sqrt(3.0) * math.sqrt(r1 * r1 + r2 * r2 + r3 * r3)
    return ErrorDecomposition(r1, r2, r3, total, bound, total <= bound * (1 + 1e-12))


# ------------------------------------------------------ stability suite


def random_stability_instance(rng: np.random.Generator, kernels=("gaussian", "wendland_c2"), M: float = 1.0):
    """Random (kernel, rho1, rho2, rho3 = rho1, lambda) for the stability check.

    rho1 is a uniform empirical measure with 5-50 atoms; rho2 moves its
    atoms and labels by a random amount, and every third instance also
    reweights rho2 so the transport LP is exercised.
    """
    from .kernel import RadialKernel
    from .spectral import DiscreteMeasure

    profile = kernels[int(rng.integers(len(kernels)))]
    kernel = RadialKernel(profile, float(rng.uniform(0.5, 2.0)))
    dim = int(rng.integers(1, 6))
    m = int(rng.integers(5, 51))
    pts = rng.uniform(-1.0, 1.0, size=(m, dim))
    labels = rng.uniform(-M, M, size=m)
    scale = float(10 ** rng.uniform(-3, -0.3))
    pts2 = pts + scale * rng.standard_normal((m, dim))
    labels2 = np.clip(labels + scale * rng.standard_normal(m), -M, M)
    rho1 = DiscreteMeasure.uniform(pts, labels)
    if rng.integers(3) == 0:
        rho2 = DiscreteMeasure.normalized(pts2, rng.dirichlet(np.ones(m)), labels2)
    else:
        rho2 = DiscreteMeasure.uniform(pts2, labels2)
    lam = float(10 ** rng.uniform(-3, 0))
    return kernel, rho1, rho2, rho1, lam


def run_stability_suite(instances: int = 500, seed: int = 0, kernels=("gaussian", "wendland_c2"), M: float = 1.0):
    """StabilityReports for ``instances`` seeded random instances."""
    from .bounds import verify_stability

    out = []
    for i in range(instances):
        rng = np.random.default_rng(derive_seed(seed, i))
        kernel, rho1, rho2, rho3, lam = random_stability_instance(rng, tuple(kernels), M)
        out.append(verify_stability(kernel, rho1, rho2, rho3, lam, M=M))
    return out
