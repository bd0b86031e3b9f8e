"""Flat ``key = value`` config files and the merged run configuration."""

from dataclasses import dataclass, field, fields, replace

from .dsp import DESK_FRAME_SPEC, FrameSpec
from .errors import ConfigError
from .maskcore import MaskCriterion
from .models import ModelConfig


def read_kv(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out


def format_value(value):
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_kv(path, mapping):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {format_value(value)}\n")


def _coerce(raw, default):
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        if str(raw).lower() in ("1", "true", "yes", "on"):
            return True
        if str(raw).lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if isinstance(default, tuple):
        items = raw if isinstance(raw, (tuple, list)) else [s for s in str(raw).split(",") if s.strip()]
        kind = type(default[0]) if default else float
        return tuple(kind(s) for s in items)
    try:
        return type(default)(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read {raw!r} as {type(default).__name__}") from exc


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0
    # train on every n-th context window of each mixture
    record_stride: int = 1
    val_stride: int = 1

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.lr < 0:
            raise ConfigError(f"invalid training settings: {self}")
        if self.record_stride < 1 or self.val_stride < 1:
            raise ConfigError("record strides must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    frame: FrameSpec = DESK_FRAME_SPEC
    criterion: MaskCriterion = field(default_factory=MaskCriterion)
    model: ModelConfig = field(default_factory=ModelConfig.desk)
    train: TrainConfig = field(default_factory=TrainConfig)

    _SECTIONS = {
        "frame": FrameSpec,
        "criterion": MaskCriterion,
        "model": ModelConfig,
        "train": TrainConfig,
    }

    def to_dict(self):
        out = {}
        for section in self._SECTIONS:
            obj = getattr(self, section)
            for f in fields(obj):
                out[f.name] = getattr(obj, f.name)
        return out

    def updated(self, values):
        """Copy with ``values`` (a flat key -> raw value dict) applied."""
        values = {k: v for k, v in values.items() if v is not None}
        known = set()
        parts = {}
        for section in self._SECTIONS:
            obj = getattr(self, section)
            changes = {}
            for f in fields(obj):
                known.add(f.name)
                if f.name in values:
                    changes[f.name] = _coerce(values[f.name], getattr(obj, f.name))
            parts[section] = replace(obj, **changes) if changes else obj
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return RunConfig(**parts)

    def save(self, path):
        write_kv(path, self.to_dict())

    @classmethod
    def load(cls, path, base=None):
        return (base or cls()).updated(read_kv(path))


def resolve(config_path=None, overrides=None, base=None):
    """Defaults, then the config file, then explicit overrides."""
    cfg = base or RunConfig()
    if config_path is not None:
        cfg = cfg.updated(read_kv(config_path))
    if overrides:
        cfg = cfg.updated(overrides)
    return cfg
