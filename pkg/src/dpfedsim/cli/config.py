"""Flat ``key = value`` experiment configuration files.

One setting per line, ``#`` starts a comment, list values are
comma-separated.  Listing several algorithms makes a paired plan: every
variant runs under the same master seeds and so shares cohorts and noise.

Keys (type, default):

    algorithm       list of FedAvg | DPFedAvgClip | DPNormFedAvg   (required)
    problem         quadratic | logistic                           (quadratic)
    n               clients                                        (100)
    d               model dimension, quadratic only                (200)
    rank            factor columns per quadratic client            (20)
    factor_std      std of factor entries                          (0.05)
    suite_seed      seed of the problem instance                   (0)
    K               rounds                                         (500)
    E               local steps per round                          (20)
    r               expected cohort size; defaults to n
    epsilon, delta  privacy budget (DP variants)                   (5, 1e-6)
    q               noise-calibration constant                     (1)
    C               clip threshold / normalization scale           (required for DP)
    eta0            initial local rate                             (0.001)
    decay           per-round rate multiplier                      (1.0)
    beta0           global rate; omit for beta_k = eta_k
    momentum        server heavy-ball coefficient                  (0)
    seed            list of master seeds                           (0)
    init            I1 | I2 | zero                                 (I1)
    average_by_actual  divide the aggregate by |S_k| instead of r  (false)
    theorem_mode    derive eta, K, C from the theorem's choices    (false)
    alpha           theorem-mode constant, >= 1                    (1)
    gamma           theorem-mode constant; auto means L * ||w_0 - w*||  (auto)
    C_hat           theorem-mode per-step scale; default 4 sqrt(L max Delta*)
    trajectory      write trajectory_<variant>.csv                 (false)
    smoothing       trajectory moving-average window               (1)
    save_trace      write trace_<variant>_<seed>.npz               (false)
    output          output directory                               (out)
    features        feature file (logistic); synthetic if omitted
    classes         classes of the synthetic logistic data         (10)
    per_class       samples per class (synthetic)                  (200)
    num_features    features incl. bias column (synthetic)         (20)
    separation      class-mean separation (synthetic)              (3.0)
    shards          label shards per client                        (5)
    l2              logistic L2 coefficient                        (1e-4)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from dpfedsim.fedopt.engine import ALGORITHMS, FEDAVG


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None,
                 path: str | None = None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        prefix = f"`{key}`: " if key else ""
        super().__init__(f"{where}{prefix}{message}")
        self.key = key
        self.line = line


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    val = float(text)
    if not val.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(val)


def _auto_float(text: str) -> float | None:
    return None if text.lower() == "auto" else float(text)


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


# key -> (parser, is_list, check, default)
def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


SCHEMA = {
    "algorithm": (_choice(*ALGORITHMS), True, None, None),
    "problem": (_choice("quadratic", "logistic"), False, None, "quadratic"),
    "n": (_int, False, _pos, 100),
    "d": (_int, False, _pos, 200),
    "rank": (_int, False, _pos, 20),
    "factor_std": (float, False, _pos, 0.05),
    "suite_seed": (_int, False, _nonneg, 0),
    "K": (_int, False, _pos, 500),
    "E": (_int, False, _pos, 20),
    "r": (float, False, _pos, None),
    "epsilon": (float, False, lambda v: v > 0 and math.isfinite(v), 5.0),
    "delta": (float, False, lambda v: 0 < v < 1, 1e-6),
    "q": (float, False, _pos, 1.0),
    "C": (float, False, _pos, None),
    "eta0": (float, False, _pos, 0.001),
    "decay": (float, False, lambda v: 0 < v <= 1, 1.0),
    "beta0": (float, False, _pos, None),
    "momentum": (float, False, lambda v: 0 <= v < 1, 0.0),
    "seed": (_int, True, _nonneg, [0]),
    "init": (_choice("I1", "I2", "zero"), False, None, "I1"),
    "average_by_actual": (_bool, False, None, False),
    "theorem_mode": (_bool, False, None, False),
    "alpha": (float, False, lambda v: v >= 1, 1.0),
    "gamma": (_auto_float, False, lambda v: v is None or v > 0, None),
    "C_hat": (float, False, _pos, None),
    "trajectory": (_bool, False, None, False),
    "smoothing": (_int, False, _pos, 1),
    "save_trace": (_bool, False, None, False),
    "output": (str, False, None, "out"),
    "features": (str, False, None, None),
    "classes": (_int, False, _pos, 10),
    "per_class": (_int, False, _pos, 200),
    "num_features": (_int, False, lambda v: v >= 2, 20),
    "separation": (float, False, _pos, 3.0),
    "shards": (_int, False, _pos, 5),
    "l2": (float, False, _nonneg, 1e-4),
}

_CHECK_TEXT = {
    "delta": "must lie in (0, 1)",
    "decay": "must lie in (0, 1]",
    "momentum": "must lie in [0, 1)",
    "alpha": "must be >= 1",
    "num_features": "must be >= 2",
}


@dataclass
class ExperimentPlan:
    variants: list[str]
    settings: dict
    seeds: list[int]
    output_directory: Path
    source: Path | None = None
    lines: dict[str, int] = field(default_factory=dict)

    def get(self, key: str):
        return self.settings[key]

    @property
    def is_private(self) -> bool:
        return any(v != FEDAVG for v in self.variants)


def parse_value(key: str, text: str, line: int | None = None, path: str | None = None):
    if key not in SCHEMA:
        raise ConfigError("unknown key", key, line, path)
    parser, is_list, check, _ = SCHEMA[key]
    items = [t.strip() for t in text.split(",")] if is_list else [text.strip()]
    if not items or any(t == "" for t in items):
        raise ConfigError("empty value", key, line, path)
    out = []
    for item in items:
        try:
            val = parser(item)
        except ValueError as exc:
            raise ConfigError(f"type mismatch: {exc}", key, line, path) from None
        if check is not None and not check(val):
            raise ConfigError(f"value {item} {_CHECK_TEXT.get(key, 'is out of range')}",
                              key, line, path)
        out.append(val)
    return out if is_list else out[0]


def parse_text(text: str, path: str | None = None, overrides: dict | None = None) -> ExperimentPlan:
    raw: dict = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", None, lineno, path)
        key, value = (s.strip() for s in body.split("=", 1))
        if key in raw:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key, lineno, path)
        raw[key] = parse_value(key, value, lineno, path)
        lines[key] = lineno
    for key, value in (overrides or {}).items():
        raw[key] = parse_value(key, value) if isinstance(value, str) else value
    return build_plan(raw, lines, path)


def build_plan(raw: dict, lines: dict | None = None, path: str | None = None) -> ExperimentPlan:
    lines = lines or {}

    def err(msg, key):
        return ConfigError(msg, key, lines.get(key), path)

    if "algorithm" not in raw:
        raise ConfigError("required key missing", "algorithm", None, path)
    settings = {k: spec[3] for k, spec in SCHEMA.items()}
    settings.update(raw)
    variants = settings.pop("algorithm")
    if len(set(variants)) != len(variants):
        raise err("each algorithm may appear once per plan", "algorithm")
    seeds = settings.pop("seed")
    if len(set(seeds)) != len(seeds):
        raise err("seeds must be distinct", "seed")
    if settings["r"] is None:
        settings["r"] = float(settings["n"])
    if settings["problem"] == "quadratic":
        if settings["rank"] > settings["d"]:
            raise err(f"rank ({settings['rank']}) must be <= d ({settings['d']})", "rank")
        if settings["r"] > settings["n"]:
            raise err(f"r must be <= n ({settings['n']})", "r")
    if settings["r"] < 1:
        raise err("r must be >= 1", "r")
    private = any(v != FEDAVG for v in variants)
    if private and settings["C"] is None and not settings["theorem_mode"]:
        raise err("DP variants need a clip threshold / scaling factor", "C")
    if not private and settings["theorem_mode"]:
        raise err("theorem mode applies to DP variants only", "theorem_mode")
    if private and settings["problem"] == "quadratic":
        # Eager rho < 1 check; the logistic dimension is only known after loading data.
        from dpfedsim.privacy import PrivacyBudget, PrivacyConfigError

        try:
            PrivacyBudget(settings["epsilon"], settings["delta"], settings["n"], settings["d"],
                          settings["q"]).rho
        except PrivacyConfigError as exc:
            raise err(str(exc), "n") from None
    return ExperimentPlan(variants, settings, seeds, Path(settings["output"]),
                          Path(path) if path else None, dict(lines))


def parse_config(path: str | Path, overrides: dict | None = None) -> ExperimentPlan:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config file not found", None, None, str(path))
    return parse_text(path.read_text(), str(path), overrides)


def parse_grid(path: str | Path) -> dict[str, list]:
    """Sweep grid: ``key = v1, v2, ...`` lines over config keys."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("grid file not found", None, None, str(path))
    grid: dict[str, list] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = v1, v2, ...', got {body!r}", None, lineno, str(path))
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", key, lineno, str(path))
        grid[key] = [t.strip() for t in value.split(",") if t.strip()]
        for item in grid[key]:
            parse_value(key, item, lineno, str(path))
    return grid
