"""Flat learner configuration and its file loader."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigError
from .inference import InferenceConfig

REWARD_MODES = ("env", "terminal")


@dataclass
class LearnerConfig:
    """Every learner knob in one flat record.

    The on-disk form is a flat YAML (or JSON) mapping with these keys; any
    key left out keeps its default.
    """

    trace_length: int = 5
    gamma: float = 0.9
    accommodation_threshold: float = 0.9
    epsilon: float = 0.0
    alpha: float = 1.0
    beta: float = 0.0  # attention adaptation is off when 0
    reward_ma_window: int = 20
    max_depth: int = 8
    prune_every: int = 500
    max_children: int = 32
    keep_top_actions: int | None = None  # None keeps every action edge
    seed: int = 0
    obs_scale: list[float] | None = None  # observation is divided by this before use
    action_grid: int = 9  # levels for continuous action spaces
    attention: list[float] | None = None  # initial attention weights, ones if None
    # learning signal: "env" is reward - reward_offset, "terminal" is 0;
    # either way terminal_bonus is added when the task itself ends the
    # episode (not the step limit)
    reward_mode: str = "env"
    reward_offset: float = 0.0
    terminal_bonus: float = 0.0
    inherit_weights: bool = False  # new nodes copy the parent's action weights
    # rate of the per-node reward baseline subtracted during assimilation; 0 is off
    credit_baseline: float = 0.0

    def __post_init__(self):
        if self.trace_length < 1:
            raise ConfigError("trace_length must be a positive integer")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if not 0.0 < self.accommodation_threshold < 1.0:
            raise ConfigError("accommodation_threshold must lie in (0, 1)")
        if not 0.0 <= self.credit_baseline <= 1.0:
            raise ConfigError("credit_baseline must lie in [0, 1]")
        if self.beta < 0:
            raise ConfigError("beta must be non-negative")
        if self.reward_ma_window < 1 or self.prune_every < 0 or self.max_children < 0:
            raise ConfigError("reward_ma_window >= 1, prune_every >= 0, max_children >= 0 required")
        if self.keep_top_actions is not None and self.keep_top_actions < 1:
            raise ConfigError("keep_top_actions must be >= 1")
        if self.action_grid < 2:
            raise ConfigError("action_grid must be >= 2")
        if self.reward_mode not in REWARD_MODES:
            raise ConfigError(f"reward_mode must be one of {REWARD_MODES}")
        try:
            InferenceConfig(self.epsilon, self.alpha, self.max_depth)
        except ValueError as e:
            raise ConfigError(str(e)) from None

    @property
    def inference(self) -> InferenceConfig:
        return InferenceConfig(self.epsilon, self.alpha, self.max_depth)

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, doc: dict) -> "LearnerConfig":
        unknown = set(doc) - set(cls.keys())
        if unknown:
            raise ConfigError(f"unknown learner config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "LearnerConfig":
        try:
            doc = yaml.safe_load(Path(path).read_text())
        except OSError as e:
            raise ConfigError(f"{path}: {e.strerror}") from None
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected a flat key-value mapping")
        return cls.from_mapping(doc)

    def to_mapping(self) -> dict:
        return {k: getattr(self, k) for k in self.keys()}

    def replace(self, **changes) -> "LearnerConfig":
        return dataclasses.replace(self, **changes)
