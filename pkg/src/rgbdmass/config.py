"""Experiment configuration: a flat key=value text format, strictly parsed."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

VARIANTS = ("image_only", "pointnet", "dgcnn", "point_transformer", "pointnet_folding")
_K_REQUIRED = ("dgcnn", "point_transformer")


@dataclass
class ExperimentConfig:
    model_variant: str
    out_dir: str = "runs/exp"
    synthetic_manifest: str = ""
    rgb_mass_manifest: str = ""
    test_manifest: str = ""
    seed: int = 0
    data_seed: int = 0
    eval_seed: int = 0
    fps_seed: int = 0
    balance_b: float = 16.5
    lam: float = 1.0
    k: int = 0  # neighborhood size; required for dgcnn / point_transformer
    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 30
    steps_per_epoch: int = 0  # 0 = consume every batch each epoch
    image_size: int = 64
    num_points: int = 1024
    rho_min: float = 10.0
    rho_max: float = 10000.0
    grid_size: int = 16
    augment: bool = True
    depth_root: str = ""  # override directory for an alternative depth source

    def __post_init__(self):
        if self.model_variant not in VARIANTS:
            raise ConfigError(f"unknown model_variant '{self.model_variant}'")
        if self.model_variant in _K_REQUIRED and self.k <= 0:
            raise ConfigError(f"model_variant '{self.model_variant}' requires k > 0")
        if not (0 < self.balance_b):
            raise ConfigError("balance_b must be positive")
        if self.lam < 0:
            raise ConfigError("lam must be non-negative")

    def to_file(self, path: str | Path) -> None:
        lines = [f"{f.name} = {getattr(self, f.name)}" for f in fields(self)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        known = {f.name: f.type for f in fields(cls)}
        values: dict = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got '{raw}'")
            key, _, value = (part.strip() for part in line.partition("="))
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown config key '{key}'")
            values[key] = _coerce(key, known[key], value, lineno)
        if "model_variant" not in values:
            raise ConfigError("config must set model_variant")
        return cls(**values)


def _coerce(key: str, annotation, value: str, lineno: int):
    text = str(annotation)
    try:
        if "bool" in text:
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if "int" in text:
            return int(value)
        if "float" in text:
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for '{key}': '{value}'") from exc
