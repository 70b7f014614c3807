"""YAML run configuration: sections env / loss / train / eval.

Unknown keys are a hard error (no silent ignore), and the fully
resolved config (defaults + file + overrides) is written next to the
run artifacts so a run can be reproduced from it.
"""

from __future__ import annotations

import dataclasses

import yaml

from .envs import _ENV_FACTORIES
from .losses import Hyperparams
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


LOSS_KEYS = {"gamma", "beta", "lamda", "msg_len"}
TRAIN_HYPER_KEYS = {"lr", "batch_size", "target_sync_interval", "grad_norm_clip",
                    "eps_start", "eps_end", "eps_anneal_steps"}
TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)} - {"env_name", "env_kwargs", "hyper"}
EVAL_KEYS = {"n_episodes", "cut_mode", "threshold", "drop_rate", "scope",
             "calibration_episodes", "dump_threshold"}
SECTIONS = {"env", "loss", "train", "eval"}


def load_config_file(path) -> dict:
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    unknown = set(raw) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return raw


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply `section.key=value` overrides; values parsed as YAML scalars."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        dotted, value = item.split("=", 1)
        section, key = dotted.split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(f"unknown override section {section!r}")
        raw.setdefault(section, {})[key] = yaml.safe_load(value)
    return raw


def _check_keys(section: str, mapping: dict, allowed: set[str]) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)} "
                          f"(allowed: {sorted(allowed)})")


def build_train_config(raw: dict, seed: int | None = None,
                       out_dir: str | None = None) -> TrainConfig:
    env_section = dict(raw.get("env", {}))
    env_name = env_section.pop("name", None)
    if env_name is None:
        raise ConfigError("config [env] section must set 'name'")
    if env_name not in _ENV_FACTORIES:
        raise ConfigError(f"unknown env {env_name!r}; choose from {sorted(_ENV_FACTORIES)}")
    env_config_cls = _ENV_FACTORIES[env_name][1]
    _check_keys("env", env_section, {f.name for f in dataclasses.fields(env_config_cls)})

    loss_section = dict(raw.get("loss", {}))
    _check_keys("loss", loss_section, LOSS_KEYS)
    train_section = dict(raw.get("train", {}))
    _check_keys("train", train_section, TRAIN_KEYS | TRAIN_HYPER_KEYS)
    eval_section = dict(raw.get("eval", {}))
    _check_keys("eval", eval_section, EVAL_KEYS)

    hyper_kwargs = dict(loss_section)
    for key in TRAIN_HYPER_KEYS:
        if key in train_section:
            hyper_kwargs[key] = train_section.pop(key)

    try:
        hyper = Hyperparams(**hyper_kwargs)
        config = TrainConfig(env_name=env_name, env_kwargs=env_section,
                             hyper=hyper, **train_section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if seed is not None:
        config.seed = seed
    if out_dir is not None:
        config.out_dir = out_dir
    return config


def eval_settings(raw: dict) -> dict:
    section = dict(raw.get("eval", {}))
    _check_keys("eval", section, EVAL_KEYS)
    return section


def resolved_config_dict(config: TrainConfig) -> dict:
    """Round-trippable view: feeding this back reproduces the run."""
    train = {f.name: getattr(config, f.name)
             for f in dataclasses.fields(TrainConfig)
             if f.name not in ("env_name", "env_kwargs", "hyper")}
    hyper = dataclasses.asdict(config.hyper)
    loss = {k: hyper.pop(k) for k in sorted(LOSS_KEYS)}
    train.update(hyper)
    return {
        "env": {"name": config.env_name, **config.env_kwargs},
        "loss": loss,
        "train": train,
    }


def write_resolved_config(config: TrainConfig, path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(resolved_config_dict(config), f, sort_keys=True)
