"""Flat ``key = value`` run configuration with strict parsing.

Lines are ``key = value``; ``#`` starts a comment. Lists are comma
separated. Unknown keys and malformed values raise ConfigError.
"""

from __future__ import annotations

import os

from .errors import ConfigError

DEFAULT_SEED = 20240917
OUT_DIR_ENV = "PCAKRR_OUT_DIR"


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _optional_int(text: str):
    return None if text.strip().lower() in ("none", "identity") else int(text)


# key -> (parser, default)
SCHEMA = {
    "seed": (int, DEFAULT_SEED),
    "out_dir": (str, None),
    "reps": (int, None),
    "n_grid": (_int_list, None),
    "m_grid": (_int_list, [256, 1024, 4096]),
    "n": (int, None),
    "kernels": (_str_list, None),
    "d": (int, 2),
    "D": (int, 10),
    "epsilon": (float, 0.1),
    "case": (str, "case1"),
    "target_fn": (str, "f1"),
    "noise_halfwidth": (float, 0.1),
    "rotation_seed": (_optional_int, 0),
    "test_size": (int, 10_000),
    "folds": (int, 5),
    "lambda_min": (float, 1e-6),
    "lambda_max": (float, 1.0),
    "lambda_count": (int, 25),
    "workers": (int, 1),
    "alpha": (float, 1.0),
    "beta": (float, 1.0),
    "instances": (int, 500),
}

# per-command defaults layered over SCHEMA defaults
COMMAND_DEFAULTS = {
    "pca-rate": {"reps": 200, "n_grid": [2**k for k in range(4, 13)]},
    "compare": {"reps": 50, "n_grid": [64, 128, 256, 512, 1024],
                "kernels": ["gaussian", "wendland_c2", "wendland_c0"]},
    "irregular": {"reps": 50, "n_grid": [64, 128, 256, 512, 1024], "kernels": ["gaussian"],
                  "target_fn": "f2"},
    "pca-oracle": {"reps": 50, "n_grid": [64, 128, 256, 512, 1024],
                   "kernels": ["gaussian", "wendland_c2", "wendland_c0"]},
    "semi-supervised": {"reps": 50, "n": 256, "kernels": ["wendland_c2"]},
    "verify-stability": {"kernels": ["gaussian", "wendland_c2"]},
    "spectra": {"n": 512, "kernels": ["gaussian"]},
}


def parse_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key = key.strip()
        if not eq:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _convert(key, value.strip())
    return out


def _convert(key: str, value: str):
    parser = SCHEMA[key][0]
    try:
        return parser(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def load(path) -> dict:
    try:
        with open(path) as fh:
            return parse_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def effective(command: str, file_values: dict, overrides: dict) -> dict:
    """Defaults < command defaults < config file < command-line flags."""
    cfg = {k: v[1] for k, v in SCHEMA.items()}
    cfg.update(COMMAND_DEFAULTS.get(command, {}))
    cfg.update(file_values)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if cfg["out_dir"] is None:
        cfg["out_dir"] = os.environ.get(OUT_DIR_ENV, "runs")
    return cfg


def dump(cfg: dict) -> str:
    lines = []
    for key in SCHEMA:
        v = cfg.get(key)
        if v is None:
            if SCHEMA[key][1] is None:
                continue
            v = "none"
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
