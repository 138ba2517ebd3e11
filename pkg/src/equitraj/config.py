"""Run configuration: defaults, key=value files, flag overrides, hashing.

Config files are plain text, one dotted ``key = value`` per line, with
'#' comments. Precedence is flags > file > defaults.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace

from .errors import InputError


@dataclass
class ModelConfig:
    t_obs: int = 8
    t_pred: int = 12
    t_channels: int = 8        # geometric time channels after the encoder
    pattern_width: int = 64    # invariant feature width
    message_width: int = 64
    token_width: int = 32
    categories: int = 2        # interaction-graph categories
    layers: int = 4
    heads: int = 1             # 1 = deterministic, 20 = multi-prediction


@dataclass
class RegularizationConfig:
    dct: bool = True
    dct_coeffs: int = 0        # 0 keeps all coefficients
    dropout: float = 0.5


@dataclass
class SceneConfig:
    enabled: bool = True
    embedding_dim: int = 16


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 60
    lr: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    clip_norm: float = 5.0
    rotation_augment: bool = False
    checkpoint_every: int = 0  # 0 = only at the end
    split_train: float = 0.7
    split_val: float = 0.1
    split_test: float = 0.2


@dataclass
class WindowConfig:
    stride: int = 1
    frame_step: int = 1        # keep every n-th distinct frame


@dataclass
class Config:
    model: ModelConfig = field(default_factory=ModelConfig)
    regularization: RegularizationConfig = field(default_factory=RegularizationConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    window: WindowConfig = field(default_factory=WindowConfig)

    def validate(self) -> None:
        m = self.model
        if m.t_obs < 3:
            raise InputError("model.t_obs must be >= 3 (velocity features need it)")
        if m.t_pred < 1 or m.t_channels < 3 or m.layers < 1 or m.heads < 1:
            raise InputError("model dimensions must be positive (t_channels >= 3)")
        if m.categories < 1:
            raise InputError("model.categories must be >= 1")
        r = self.regularization
        if not 0.0 <= r.dropout < 1.0:
            raise InputError("regularization.dropout must be in [0, 1)")
        if r.dct_coeffs < 0 or r.dct_coeffs > m.t_obs:
            raise InputError("regularization.dct_coeffs must be in [0, t_obs]")
        t = self.train
        if t.batch_size < 1 or t.epochs < 1:
            raise InputError("train.batch_size and train.epochs must be >= 1")
        if min(t.split_train, t.split_val, t.split_test) < 0:
            raise InputError("split ratios must be non-negative")
        if abs(t.split_train + t.split_val + t.split_test - 1.0) > 1e-9:
            raise InputError("split ratios must sum to 1")
        w = self.window
        if w.stride < 1 or w.frame_step < 1:
            raise InputError("window.stride and window.frame_step must be >= 1")

    # -- flat key=value view ------------------------------------------------

    def to_flat(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for section_field in fields(self):
            section = getattr(self, section_field.name)
            for f in fields(section):
                out[f"{section_field.name}.{f.name}"] = getattr(section, f.name)
        return out

    def hash(self) -> str:
        lines = [f"{k}={_format_value(v)}" for k, v in sorted(self.to_flat().items())]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()


_SECTIONS = {f.name for f in fields(Config)}


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _parse_value(raw: str, target_type: type):
    raw = raw.strip()
    if target_type is bool:
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise InputError(f"expected a boolean, got {raw!r}")
    try:
        return target_type(raw)
    except ValueError:
        raise InputError(f"expected {target_type.__name__}, got {raw!r}") from None


def apply_overrides(config: Config, overrides: dict[str, str]) -> Config:
    """Return a new Config with dotted-key string overrides applied."""
    sections = {name: getattr(config, name) for name in _SECTIONS}
    for key, raw in overrides.items():
        if "." not in key:
            raise InputError(f"config key {key!r} must be section.field")
        section_name, field_name = key.split(".", 1)
        if section_name not in sections:
            raise InputError(f"unknown config section {section_name!r}")
        section = sections[section_name]
        section_fields = {f.name: f for f in fields(section)}
        if field_name not in section_fields:
            raise InputError(f"unknown config key {key!r}")
        current = getattr(section, field_name)
        value = _parse_value(raw, type(current))
        sections[section_name] = replace(section, **{field_name: value})
    return Config(**sections)


def load_config_file(path) -> dict[str, str]:
    """Parse a key=value config file into raw string overrides."""
    overrides: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise InputError(f"{path}: line {lineno}: expected key = value")
            key, _, raw = stripped.partition("=")
            overrides[key.strip()] = raw.strip()
    return overrides


def serialize_config(config: Config) -> str:
    return "\n".join(
        f"{k} = {_format_value(v)}" for k, v in sorted(config.to_flat().items())
    )
