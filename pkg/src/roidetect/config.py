"""Run configuration: one JSON file, CLI flags may override single fields.

The resolved config is embedded verbatim into every report so a run can be
reproduced from its outputs alone.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .classifier import TrainConfig
from .dataset import DEFAULT_TAU
from .errors import InvalidInputError
from .optics import OpticsParams
from .synthetic import ColorModel, SynthConfig


@dataclass(frozen=True)
class OpticsConfig:
    eps: float = 2.0
    min_pts: int = 5
    threshold: float = 1.5

    def params(self) -> OpticsParams:
        return OpticsParams(eps=self.eps, min_pts=self.min_pts)


@dataclass(frozen=True)
class PathsConfig:
    manifest: str = "manifest.json"
    out_dir: str = "out"
    model: str = "model.json"


@dataclass(frozen=True)
class RunConfig:
    patch_size: int = 32
    tau: float = DEFAULT_TAU
    train_frac: float = 0.8
    fractions: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
    repeats: int = 10
    seed: int = 7
    optics: OpticsConfig = field(default_factory=OpticsConfig)
    classifier: TrainConfig = field(default_factory=TrainConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTION_TYPES = {
    "optics": OpticsConfig,
    "classifier": TrainConfig,
    "synth": SynthConfig,
    "paths": PathsConfig,
}


def _build_section(cls, payload: dict, context: str):
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(payload) - set(known)
    if unknown:
        raise InvalidInputError(f"{context}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in payload.items():
        if key == "colors" and cls is SynthConfig:
            value = _build_section(ColorModel, value, f"{context}.colors")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def load_config(path: str | Path | None = None, *,
                seed: int | None = None,
                out_dir: str | None = None,
                manifest: str | None = None) -> RunConfig:
    """Defaults, optionally overlaid with a JSON file, then flag overrides.

    Relative manifest/out_dir/model paths in a config file are resolved
    against the file's directory.
    """
    payload: dict = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise InvalidInputError(f"{path}: expected a JSON object")
        base = path.parent

    sections = {}
    scalars = {}
    for key, value in payload.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise InvalidInputError(f"config section {key!r} must be an object")
            sections[key] = _build_section(_SECTION_TYPES[key], value, key)
        else:
            scalars[key] = tuple(value) if isinstance(value, list) else value

    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(scalars) - known
    if unknown:
        raise InvalidInputError(f"config: unknown keys {sorted(unknown)}")

    config = RunConfig(**scalars, **sections)

    paths = config.paths
    resolved = PathsConfig(
        manifest=str((base / paths.manifest) if not Path(paths.manifest).is_absolute() else paths.manifest),
        out_dir=str((base / paths.out_dir) if not Path(paths.out_dir).is_absolute() else paths.out_dir),
        model=str((base / paths.model) if not Path(paths.model).is_absolute() else paths.model),
    )
    if manifest is not None:
        resolved = dataclasses.replace(resolved, manifest=manifest)
    if out_dir is not None:
        resolved = dataclasses.replace(resolved, out_dir=out_dir)
    config = dataclasses.replace(config, paths=resolved)
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)

    if not 0 < config.tau <= 1:
        raise InvalidInputError(f"tau must be in (0, 1], got {config.tau}")
    if config.repeats < 1:
        raise InvalidInputError(f"repeats must be >= 1, got {config.repeats}")
    if not config.fractions:
        raise InvalidInputError("fractions must be non-empty")
    for f in config.fractions:
        if not 0 < f <= 1:
            raise InvalidInputError(f"fraction {f} outside (0, 1]")
    return config
