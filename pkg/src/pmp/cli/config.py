"""Run configuration: one YAML file per run, validated strictly before anything runs."""
from __future__ import annotations

import dataclasses
import os
import typing
from pathlib import Path
from typing import Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, create_model

from ..gym_hand import GymEpisodeConfig
from ..prior import KERNEL_GAMMA, RewardWeights
from ..tasks import CartConfig, GraspHoldConfig, ReachConfig, SplitWalkerConfig
from ..trainer import PpoConfig

OUTPUT_ROOT_ENV = "PMP_OUTPUT_ROOT"

TASK_CONFIGS = {
    "reach": ReachConfig,
    "gym": GymEpisodeConfig,
    "walker": SplitWalkerConfig,
    "cart": CartConfig,
    "grasp_hold": GraspHoldConfig,
}


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


def _schema(cls):
    """Strict pydantic model mirroring the fields of a config dataclass."""
    hints = typing.get_type_hints(cls)
    fields = {}
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        fields[f.name] = (hints[f.name], default)
    return create_model(f"{cls.__name__}Schema", __config__=ConfigDict(extra="forbid"), **fields)


_SCHEMAS = {cls: _schema(cls) for cls in [PpoConfig, RewardWeights, *TASK_CONFIGS.values()]}


class ExpertSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    episodes: int = Field(10, ge=0)
    min_contacts: int = Field(1, ge=0)
    file: str = "expert.json"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    task: Literal["reach", "gym", "walker", "cart", "grasp_hold"]
    seed: int = 0
    output_dir: str = "run"
    updates: int = Field(100, ge=0)
    eval_episodes: int = Field(10, ge=1)
    eval_every: int = Field(0, ge=0)
    checkpoint_every: int = Field(0, ge=0)
    use_prior: bool = True
    blend_prob: Union[Literal["auto"], float] = "auto"
    kernel_gamma: float = Field(KERNEL_GAMMA, gt=0)
    max_incidents: int = Field(10_000, ge=0)
    weights: dict = Field(default_factory=dict)
    ppo: dict = Field(default_factory=dict)
    env: dict = Field(default_factory=dict)
    expert: ExpertSection = Field(default_factory=ExpertSection)

    # -- typed views built after validation -----------------------------
    def ppo_config(self) -> PpoConfig:
        return _build(PpoConfig, self.ppo, "ppo")

    def reward_weights(self) -> RewardWeights:
        return _build(RewardWeights, self.weights, "weights")

    def env_config(self):
        return _build(TASK_CONFIGS[self.task], self.env, "env")

    def output_path(self) -> Path:
        return resolve_output(self.output_dir)


def resolve_output(path) -> Path:
    """Relative paths live under $PMP_OUTPUT_ROOT (default: the working directory)."""
    p = Path(path)
    if p.is_absolute():
        return p
    return Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / p


def _build(cls, values, where):
    try:
        data = _SCHEMAS[cls].model_validate(values or {})
        return cls(**{f.name: getattr(data, f.name) for f in dataclasses.fields(cls)})
    except ValidationError as e:
        raise ConfigError(f"{where}: {_describe(e)}") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from None


def _describe(err: ValidationError):
    return "; ".join(f"{'.'.join(str(x) for x in e['loc']) or '<root>'}: {e['msg']}" for e in err.errors())


def apply_overrides(raw: dict, overrides):
    """Apply ``a.b=value`` assignments; values are parsed as YAML scalars."""
    raw = dict(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = raw
        for p in parts[:-1]:
            child = node.get(p)
            if child is None:
                child = {}
            elif not isinstance(child, dict):
                raise ConfigError(f"override {key!r}: {p!r} is not a section")
            node[p] = child = dict(child)
            node = child
        node[parts[-1]] = yaml.safe_load(text)
    return raw


def parse_config(raw, overrides=()) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    raw = apply_overrides(raw, overrides)
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(_describe(e)) from None
    if not isinstance(cfg.blend_prob, str) and not 0.0 <= cfg.blend_prob <= 1.0:
        raise ConfigError("blend_prob must be 'auto' or lie in [0, 1]")
    # build every typed section once so all errors surface before any work starts
    cfg.ppo_config()
    cfg.reward_weights()
    cfg.env_config()
    return cfg


def load_config(path, overrides=()) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse_config(raw if raw is not None else {}, overrides)


def dump_config(cfg: RunConfig, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(yaml.safe_dump(cfg.model_dump(), sort_keys=False))
