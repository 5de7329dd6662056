"""Layered run configuration.

One JSON file overrides the built-in defaults section by section; CLI flags
override the file. ``effective_config`` returns the merged document that every
command prints as its provenance header.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

from .delaynet import ModelConfig
from .generator import GeneratorConfig
from .physics import DamageRule
from .recovery import SdiConfig
from .surrogate import SurrogateConfig

ENV_CONFIG_PATH = "DELAYCAST_CONFIG"


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, dict[str, Any]] = {
    "physics": {
        "logistic_k": 1.0,
        "logistic_e_half_mj": 3.0,
    },
    "sdi": {
        "weights": {"main_control": 0.35, "power": 0.30, "centrifuge": 0.25, "secondary": 0.10},
        "t_window_days": 90.0,
        "elasticity": 0.0,
    },
    "generator": {
        "T": 6,
        "priority_falloff": 0.88,
        "stagger_energy_factor": 0.92,
        "noise_sigma_days": 5.0,
        "cf_tag_tolerance_days": 1.0,
        "n_cf_candidates": 3,
        "depth_jitter": 0.12,
        "vulnerability_range": [0.4, 1.0],
    },
    "dataset": {
        "n": 2000,
        "splits": [0.7, 0.15, 0.15],
    },
    "model": {
        "heads": 4,
        "embed_dim": 32,
        "gat_layers": 2,
        "temporal_kernel": 3,
        "dilations": [1, 2, 4],
        "lam": 0.1,
        "beta": 0.01,
        "lr": 0.01,
        "epochs": 35,
        "batch_size": 32,
        "cf_mode": "tagged",
        "creg_noise_scale": 0.25,
        "use_intervention": True,
    },
    "surrogate": {
        "hidden": 64,
        "lr": 3e-3,
        "epochs": 400,
        "mu": 1.0,
        "holdout_fraction": 0.2,
    },
    "service": {
        "host": "127.0.0.1",
        "port": 8000,
        "journal_dir": None,
    },
}


def _deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(base[key], value, where)
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None = None) -> dict[str, Any]:
    """Defaults, overlaid by the file at ``path`` (or $DELAYCAST_CONFIG)."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path is None:
        return json.loads(json.dumps(DEFAULTS))
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    return _deep_merge(json.loads(json.dumps(DEFAULTS)), doc)


def effective_config(cfg: dict[str, Any], seed: int) -> str:
    return json.dumps({"seed": seed, **cfg}, sort_keys=True)


def damage_rule(cfg: dict[str, Any]) -> DamageRule:
    p = cfg["physics"]
    return DamageRule(k=float(p["logistic_k"]), e_half_mj=float(p["logistic_e_half_mj"]))


def sdi_config(cfg: dict[str, Any]) -> SdiConfig:
    s = cfg["sdi"]
    return SdiConfig(
        weights=dict(s["weights"]),
        t_window_days=float(s["t_window_days"]),
        elasticity=float(s["elasticity"]),
    )


def generator_config(cfg: dict[str, Any]) -> GeneratorConfig:
    g = cfg["generator"]
    return GeneratorConfig(
        T=int(g["T"]),
        priority_falloff=float(g["priority_falloff"]),
        stagger_energy_factor=float(g["stagger_energy_factor"]),
        noise_sigma_days=float(g["noise_sigma_days"]),
        cf_tag_tolerance_days=float(g["cf_tag_tolerance_days"]),
        n_cf_candidates=int(g["n_cf_candidates"]),
        depth_jitter=float(g["depth_jitter"]),
        vulnerability_range=tuple(g["vulnerability_range"]),
        damage_rule=damage_rule(cfg),
        sdi=sdi_config(cfg),
    )


def model_config(cfg: dict[str, Any], seed: int) -> ModelConfig:
    m = cfg["model"]
    return ModelConfig(
        heads=int(m["heads"]),
        embed_dim=int(m["embed_dim"]),
        gat_layers=int(m["gat_layers"]),
        temporal_kernel=int(m["temporal_kernel"]),
        dilations=tuple(int(d) for d in m["dilations"]),
        lam=float(m["lam"]),
        beta=float(m["beta"]),
        lr=float(m["lr"]),
        epochs=int(m["epochs"]),
        batch_size=int(m["batch_size"]),
        seed=seed,
        cf_mode=str(m["cf_mode"]),
        creg_noise_scale=float(m["creg_noise_scale"]),
        use_intervention=bool(m["use_intervention"]),
    )


def surrogate_config(cfg: dict[str, Any], seed: int) -> SurrogateConfig:
    s = cfg["surrogate"]
    return SurrogateConfig(
        hidden=int(s["hidden"]),
        lr=float(s["lr"]),
        epochs=int(s["epochs"]),
        seed=seed,
        mu=float(s["mu"]),
        holdout_fraction=float(s["holdout_fraction"]),
    )
