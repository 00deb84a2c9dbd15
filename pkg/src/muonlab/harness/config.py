"""Experiment config files (JSON) with dotted ``key=value`` overrides.

A config is a nested mapping whose shape is fixed by ``DEFAULTS``; unknown keys
are rejected at every level. The resolved mapping (defaults, then the file,
then overrides) is what gets written next to a run's outputs.
"""

import copy
import json
import os

from ..exceptions import ArtifactIOError, ConfigError
from ..optimizer import BaselineConfig, BaselineKind, LrScaling, MuonConfig, Variant
from ..orthogonalize import OrthKind, OrthMethod
from ..problems import ProblemConfig
from .runner import Metric

DEFAULTS = {
    "problem": ProblemConfig().to_dict(),
    "optimizer": {
        "type": "muon",  # muon, momentum_sgd or adamw
        "variant": Variant.NESTEROV_WD.value,
        "eta": 0.01,
        "beta": 0.9,
        "lam": 0.1,
        "orth": OrthKind.EXACT_SVD.value,
        "ns_steps": 5,
        "beta2": 0.999,
        "eps": 1e-8,
    },
    "run": {
        "batch": 16,
        "max_steps": 200,
        "seeds": [0, 1, 2, 3, 4],
        "metric": Metric.LOSS.value,
        "target": None,
    },
    "sweep": {
        "batch_grid": [2 ** k for k in range(1, 13)],
        "eta_grid": [4.0, 8.0, 16.0, 32.0],
        "beta_grid": [0.7, 0.9, 0.95],
        "variants": [v.value for v in Variant],
        "lr_rule": LrScaling.SQRT.value,
        "reference_batch": 512,
        "epsilon": None,
        "workers": 1,
    },
    "output_dir": "out",
}


def _merge(base, update, path=""):
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value
    return base


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_override(item):
    """``"a.b=3"`` -> (["a", "b"], 3). Values are JSON when they parse as JSON."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, _, raw = item.partition("=")
    parts = key.strip().split(".")
    if not all(parts):
        raise ConfigError(f"bad override key {key!r}")
    return parts, _parse_value(raw.strip())


def apply_overrides(cfg, overrides):
    for item in overrides or ():
        parts, value = parse_override(item)
        nested = value
        for p in reversed(parts):
            nested = {p: nested}
        _merge(cfg, nested)
    return cfg


def load_config(path=None, overrides=()) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ArtifactIOError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        _merge(cfg, data)
    return apply_overrides(cfg, overrides)


def write_snapshot(cfg, directory, name="resolved_config.json") -> str:
    path = os.path.join(directory, name)
    try:
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ArtifactIOError(f"cannot write config snapshot {path}: {exc}") from exc
    return path


def build_problem(cfg):
    return ProblemConfig.from_dict(cfg["problem"]).build()


def build_optimizer(cfg, **changes):
    """Optimizer config from the ``optimizer`` section; keyword args override fields."""
    o = dict(cfg["optimizer"], **changes)
    kind = o["type"]
    if kind == "muon":
        orth = OrthMethod(kind=o["orth"], ns_steps=o["ns_steps"])
        return MuonConfig.for_variant(o["variant"], eta=float(o["eta"]), beta=float(o["beta"]),
                                      lam=float(o["lam"]), orth=orth)
    try:
        kind = BaselineKind(kind)
    except ValueError:
        raise ConfigError(f"unknown optimizer type {kind!r}") from None
    return BaselineConfig(kind=kind, eta=float(o["eta"]), momentum=float(o["beta"]),
                          beta2=float(o["beta2"]), eps=float(o["eps"]), lam=float(o["lam"]))
