"""Experiment configuration schema (version 1)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .error_model import (
    DetectorErrorModel,
    build_repetition_code,
    build_surface_code_phenomenological,
    canonicalize,
    parse_dem,
)
from .reweighting import Criterion

__all__ = ["ConfigError", "ExperimentConfig", "Z_PRESETS", "load_config"]

SCHEMA_VERSION = 1

Z_PRESETS: dict[str, tuple[float, ...]] = {
    "surface": (1e-12, 1e-6, 1e-3, 0.01, 0.02, 0.04, 0.06, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    "bb18": (1e-8, 0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0),
    "bb": (1e-15, 1e-8, 1e-4, 1e-3, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` holds ``(field.path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RepetitionSource(_Strict):
    kind: Literal["repetition"]
    distance: int
    rounds: int = 1
    p_data: float
    p_meas: float = 0.0

    def build(self, base: Path | None = None) -> DetectorErrorModel:
        return build_repetition_code(self.distance, self.rounds, self.p_data, self.p_meas)

    def label(self) -> str:
        return f"repetition(d={self.distance},rounds={self.rounds},p_data={self.p_data!r},p_meas={self.p_meas!r})"


class SurfaceSource(_Strict):
    kind: Literal["surface"]
    distance: int
    rounds: int = 1
    p: float

    def build(self, base: Path | None = None) -> DetectorErrorModel:
        return build_surface_code_phenomenological(self.distance, self.rounds, self.p)

    def label(self) -> str:
        return f"surface(d={self.distance},rounds={self.rounds},p={self.p!r})"


class FileSource(_Strict):
    kind: Literal["file"]
    path: str

    def resolve(self, base: Path | None) -> Path:
        p = Path(self.path)
        return p if p.is_absolute() or base is None else base / p

    def build(self, base: Path | None = None) -> DetectorErrorModel:
        return canonicalize(parse_dem(self.resolve(base).read_text()))

    def label(self) -> str:
        return f"file({Path(self.path).name})"


ModelSource = Annotated[Union[RepetitionSource, SurfaceSource, FileSource], Field(discriminator="kind")]


class DecoderSpec(_Strict):
    name: Literal["bposd", "mwpm", "ml"] = "bposd"
    max_iterations: int = Field(200, ge=1)
    scaling_factor: float = Field(1.0, gt=0.0, le=1.0)
    schedule: Literal["parallel", "serial"] = "parallel"
    max_defects: int = Field(16, ge=1, le=24)


class PolicySpec(_Strict):
    criterion: str = "3R-LEC"
    rule: Literal["ratio", "gap"] = "ratio"
    z: list[float] | None = None
    z_preset: str | None = None

    @field_validator("criterion")
    @classmethod
    def _criterion(cls, v: str) -> str:
        return str(Criterion.parse(v))

    @field_validator("z")
    @classmethod
    def _z(cls, v):
        if v is not None:
            for i, z in enumerate(v):
                if not z >= 0.0:
                    raise ValueError(f"z[{i}] = {z} must be non-negative")
        return v

    @model_validator(mode="after")
    def _one_grid(self):
        if (self.z is None) == (self.z_preset is None):
            raise ValueError("give exactly one of 'z' or 'z_preset'")
        if self.z_preset is not None and self.z_preset not in Z_PRESETS:
            raise ValueError(f"unknown z_preset {self.z_preset!r}; choose from {sorted(Z_PRESETS)}")
        return self

    def z_values(self) -> tuple[float, ...]:
        return tuple(self.z) if self.z is not None else Z_PRESETS[self.z_preset]


class WindowSpec(_Strict):
    n_com: int = Field(ge=1)
    n_buf: int = Field(ge=0)
    scope: Literal["full_window", "commit_only"] = "full_window"


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    model: ModelSource
    decoder: DecoderSpec = DecoderSpec()
    policy: PolicySpec
    window: WindowSpec | None = None
    shots: int = Field(ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    workers: int = Field(1, ge=1)
    output: str | None = None

    def with_overrides(self, base_dir: Path | None = None, **kw) -> "ExperimentConfig":
        """Copy with the non-``None`` keyword values replaced, validated again."""
        data = self.model_dump()
        data.update({k: v for k, v in kw.items() if v is not None})
        return validate_config(data, base_dir)


def _loc(loc) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        elif part in ("repetition", "surface", "file"):
            continue
        else:
            out += ("." if out else "") + str(part)
    return out or "<root>"


def validate_config(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError([(_loc(e["loc"]), e["msg"]) for e in exc.errors()]) from None
    if isinstance(cfg.model, FileSource):
        if not cfg.model.resolve(base_dir).is_file():
            raise ConfigError([("model.path", f"file not found: {cfg.model.path}")])
    else:
        try:
            cfg.model.build()  # builders are cheap; surfaces their range checks here
        except ValueError as exc:
            raise ConfigError([("model", str(exc))]) from None
    return cfg


def load_config(path: str | Path) -> tuple[ExperimentConfig, Path]:
    """Read a YAML or JSON config; returns it with the directory for relative paths."""
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError([("<root>", f"cannot parse {path.name}: {exc}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "config must be a mapping")])
    return validate_config(data, path.parent), path.parent
