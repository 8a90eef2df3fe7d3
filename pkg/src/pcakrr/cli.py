"""Command-line entry point: ``pcakrr <command> [options]``.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 a verification suite found a violated inequality.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from scipy.linalg import LinAlgError

from . import config as cfgmod
from . import datagen, experiments, spectral
from .datagen import GenConfig
from .errors import ConfigError, NumericalError
from .kernel import parse_kernel
from .svgplot import line_plot

COMMANDS = ("pca-rate", "compare", "irregular", "pca-oracle", "semi-supervised", "verify-stability", "spectra")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _ints(text):
    return cfgmod._int_list(text)


def _strs(text):
    return cfgmod._str_list(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pcakrr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="flat key = value config file")
        s.add_argument("--out-dir", dest="out_dir")
        s.add_argument("--seed", type=int, help=f"base seed (default {cfgmod.DEFAULT_SEED})")
        s.add_argument("--reps", type=int)
        s.add_argument("--n-grid", dest="n_grid", type=_ints)
        s.add_argument("--m-grid", dest="m_grid", type=_ints)
        s.add_argument("--n", type=int)
        s.add_argument("--kernels", type=_strs, help="comma separated, e.g. gaussian,wendland_c2:gamma=2")
        s.add_argument("--case", choices=datagen.CASES)
        s.add_argument("--target-fn", dest="target_fn", choices=datagen.TARGETS)
        s.add_argument("--test-size", dest="test_size", type=int)
        s.add_argument("--workers", type=int)
        s.add_argument("--alpha", type=float)
        s.add_argument("--beta", type=float)
        s.add_argument("--instances", type=int)
    return p


def _gen_config(cfg: dict) -> GenConfig:
    try:
        return GenConfig(
            d=cfg["d"], D=cfg["D"], epsilon=cfg["epsilon"], case=cfg["case"],
            target_fn=cfg["target_fn"], noise_halfwidth=cfg["noise_halfwidth"],
            rotation_seed=cfg["rotation_seed"], sample_seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _validate(cfg: dict) -> None:
    for spec in cfg.get("kernels") or []:
        try:
            parse_kernel(spec)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    for key in ("reps", "folds", "test_size", "workers", "instances", "lambda_count"):
        if cfg.get(key) is not None and cfg[key] < 1:
            raise ConfigError(f"{key} must be positive")
    if not 0 < cfg["lambda_min"] <= cfg["lambda_max"]:
        raise ConfigError("need 0 < lambda_min <= lambda_max")


def _lambda_grid(cfg):
    return tuple(np.logspace(np.log10(cfg["lambda_min"]), np.log10(cfg["lambda_max"]), cfg["lambda_count"]))


def _experiment(command: str, cfg: dict, gen: GenConfig) -> experiments.ExperimentReport:
    common = dict(seed=cfg["seed"], workers=cfg["workers"])
    fitting = dict(test_size=cfg["test_size"], folds=cfg["folds"], lambda_grid=_lambda_grid(cfg))
    if command == "pca-rate":
        return experiments.run_pca_rate(gen, tuple(cfg["n_grid"]), cfg["reps"],
                                        eval_size=cfg["test_size"], **common)
    if command == "compare":
        return experiments.run_error_comparison(gen, cfg["kernels"], tuple(cfg["n_grid"]), cfg["reps"],
                                                experiment_id=f"compare_{gen.case}", **common, **fitting)
    if command == "irregular":
        return experiments.run_irregular(gen, cfg["kernels"][0], tuple(cfg["n_grid"]), cfg["reps"],
                                         **common, **fitting)
    if command == "pca-oracle":
        return experiments.run_pca_oracle(gen, cfg["kernels"], tuple(cfg["n_grid"]), cfg["reps"],
                                          **common, **fitting)
    if command == "semi-supervised":
        return experiments.run_semi_supervised(gen, cfg["n"], tuple(cfg["m_grid"]), cfg["reps"],
                                               kernel=cfg["kernels"][0], alpha=cfg["alpha"],
                                               beta=cfg["beta"], **common, **fitting)
    raise ConfigError(f"unknown command {command}")


def _verify_stability(cfg: dict) -> int:
    profiles = [parse_kernel(k).profile for k in cfg["kernels"]]
    reports = experiments.run_stability_suite(cfg["instances"], cfg["seed"], profiles)
    path = os.path.join(cfg["out_dir"], "stability_reports.jsonl")
    with open(path, "w") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")
    failed = [i for i, r in enumerate(reports) if not r.holds]
    ratios = [r.lhs / r.rhs for r in reports if r.rhs > 0]
    summary = {"instances": len(reports), "holds": len(reports) - len(failed),
               "failed_instances": failed, "max_lhs_over_rhs": max(ratios, default=0.0)}
    with open(os.path.join(cfg["out_dir"], "stability_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"stability: {summary['holds']}/{summary['instances']} instances satisfy the bound")
    if failed:
        print(f"violations at instances {failed}", file=sys.stderr)
        return 3
    return 0


def _spectra(cfg: dict, gen: GenConfig) -> int:
    kernel = parse_kernel(cfg["kernels"][0])
    xs = datagen.gen_x(gen, cfg["n"])
    reduced = datagen.true_projection(gen).reduce(xs)
    series, fits = {}, {}
    for label, pts in (("full", xs), ("reduced", reduced)):
        eigs = spectral.integral_operator_eigs(kernel, spectral.DiscreteMeasure.uniform(pts))
        spectral.write_spectrum_csv(eigs, os.path.join(cfg["out_dir"], f"spectrum_{label}.csv"))
        fit = spectral.decay_exponent(eigs)
        fits[label] = {"alpha": fit.alpha, "slope": fit.slope, "r_squared": fit.r_squared}
        idx = np.arange(1, eigs.size + 1)
        series[label] = (idx, eigs)
    line_plot(series, os.path.join(cfg["out_dir"], "spectra.svg"), title=f"spectrum, {kernel.spec()}",
              xlabel="index", ylabel="eigenvalue", logx=True, logy=True)
    with open(os.path.join(cfg["out_dir"], "spectra_decay.json"), "w") as fh:
        json.dump(fits, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"decay exponents: full {fits['full']['alpha']:.4f}, reduced {fits['reduced']['alpha']:.4f}")
    return 0


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    file_values = cfgmod.load(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    cfg = cfgmod.effective(args.command, file_values, overrides)
    _validate(cfg)
    gen = _gen_config(cfg)
    try:
        os.makedirs(cfg["out_dir"], exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}") from None
    with open(os.path.join(cfg["out_dir"], f"{args.command}.config"), "w") as fh:
        fh.write(cfgmod.dump(cfg))
    if args.command == "verify-stability":
        return _verify_stability(cfg)
    if args.command == "spectra":
        return _spectra(cfg, gen)
    report = _experiment(args.command, cfg, gen)
    paths = report.write(cfg["out_dir"])
    print(f"wrote {paths['rows']}")
    for key, value in report.extras.items():
        if isinstance(value, float):
            print(f"{key}: {value:.4f}")
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except (NumericalError, LinAlgError, ArithmeticError) as exc:
        # LinAlgError subclasses ValueError, so it must be caught first
        print(f"pcakrr: numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"pcakrr: invalid configuration: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
