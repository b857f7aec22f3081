"""Experiment configuration: one YAML file, typed sections, errors keyed by field path."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .field import GridSpec
from .propagation import Medium
from .quantum import default_labels
from .retrieval import GsaOptions
from .turbulence import TurbulenceModel, default_model, load_model


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path or '<root>'}: {message}")
        self.path = path


@dataclass
class GridConfig:
    samples_per_side: int = 256
    waists_across: float = 16.0


@dataclass
class BeamConfig:
    waist: float = 1e-3
    wavelength: float = 635e-9
    profile: str = "helical-gaussian"


@dataclass
class MediumConfig:
    refractive_index: float = 1.33
    absorption_coefficient: float = 0.0


@dataclass
class ChannelConfig:
    distance: float = 3.0
    aperture_waists: float = 3.0
    ensemble_size: int = 100


@dataclass
class TurbulenceConfig:
    model: str = "default"
    strength: float = 1.0
    correlation_time: float = 0.5


@dataclass
class ProtocolConfig:
    kind: str = "bb84"
    dimension: int = 2
    oam_labels: typing.Optional[list[int]] = None
    shots: typing.Optional[int] = 100000
    matrices: typing.Optional[list[str]] = None


@dataclass
class GsaConfig:
    max_iterations: int = 40
    convergence_tolerance: float = 1e-5
    initial_phase: str = "zeros"


@dataclass
class CharacterizeConfig:
    frames_dir: typing.Optional[str] = None
    dark_level: float = 0.0
    max_j: int = 10
    gsa: GsaConfig = field(default_factory=GsaConfig)


@dataclass
class VortexConfig:
    oam: int = 2
    n_frames: int = 20
    intensity_floor: float = 1e-4
    max_step_waists: float = 0.5


@dataclass
class ExperimentConfig:
    seed: typing.Optional[int] = None
    threads: int = 1
    out: typing.Optional[str] = None
    grid: GridConfig = field(default_factory=GridConfig)
    beam: BeamConfig = field(default_factory=BeamConfig)
    medium: MediumConfig = field(default_factory=MediumConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    turbulence: TurbulenceConfig = field(default_factory=TurbulenceConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    characterize: CharacterizeConfig = field(default_factory=CharacterizeConfig)
    vortex: VortexConfig = field(default_factory=VortexConfig)
    # directory relative paths are resolved against; not part of the file
    base_dir: str = field(default=".", metadata={"internal": True})

    # derived objects

    def grid_spec(self) -> GridSpec:
        return GridSpec.for_waist(self.beam.waist, self.beam.wavelength,
                                  samples_per_side=self.grid.samples_per_side,
                                  waists_across=self.grid.waists_across)

    def medium_spec(self) -> Medium:
        return Medium(self.medium.refractive_index, self.medium.absorption_coefficient)

    @property
    def aperture_radius(self) -> float:
        return self.channel.aperture_waists * self.beam.waist

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    def turbulence_model(self) -> TurbulenceModel:
        t = self.turbulence
        model = default_model() if t.model == "default" else load_model(self.resolve(t.model))
        model = model.scaled(t.strength)
        if self.seed is not None:
            model = dataclasses.replace(model, rng_seed=self.seed)
        return model

    def gsa_options(self) -> GsaOptions:
        g = self.characterize.gsa
        return GsaOptions(g.max_iterations, g.convergence_tolerance, g.initial_phase,
                          self.seed or 0)

    def oam_labels(self) -> tuple[int, ...]:
        p = self.protocol
        return tuple(p.oam_labels) if p.oam_labels is not None else default_labels(p.dimension)

    def to_mapping(self) -> dict:
        doc = dataclasses.asdict(self)
        doc.pop("base_dir")
        return doc

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=True, default_flow_style=False)


def _convert(tp, value, path: str):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _convert(args[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        (item,) = typing.get_args(tp)
        return [_convert(item, v, f"{path}[{k}]") for k, v in enumerate(value)]
    if value is None:
        raise ConfigError(path, "value is required")
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool):
            raise ConfigError(path, f"expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(path, f"expected a number, got {value!r}") from None
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    raise ConfigError(path, f"unsupported field type {tp}")


def _build(cls, doc, path: str = ""):
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(path, f"expected a mapping, got {type(doc).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if not f.metadata.get("internal")}
    for key in doc:
        if key not in names:
            raise ConfigError(f"{path}.{key}" if path else str(key), "unknown field")
    kwargs = {k: _convert(hints[k], v, f"{path}.{k}" if path else k) for k, v in doc.items()}
    return cls(**kwargs)


def _check(cfg: ExperimentConfig) -> None:
    def positive(path, value):
        if not value > 0:
            raise ConfigError(path, f"must be positive, got {value}")

    positive("grid.samples_per_side", cfg.grid.samples_per_side)
    positive("grid.waists_across", cfg.grid.waists_across)
    positive("beam.waist", cfg.beam.waist)
    positive("beam.wavelength", cfg.beam.wavelength)
    positive("channel.aperture_waists", cfg.channel.aperture_waists)
    positive("channel.ensemble_size", cfg.channel.ensemble_size)
    positive("turbulence.correlation_time", cfg.turbulence.correlation_time)
    positive("threads", cfg.threads)
    if cfg.channel.distance < 0:
        raise ConfigError("channel.distance", "must be non-negative")
    if cfg.turbulence.strength < 0:
        raise ConfigError("turbulence.strength", "must be non-negative")
    if cfg.protocol.shots is not None:
        positive("protocol.shots", cfg.protocol.shots)
    if cfg.turbulence.model != "default" and not cfg.resolve(cfg.turbulence.model).is_file():
        raise ConfigError("turbulence.model", f"file not found: {cfg.turbulence.model}")
    for k, m in enumerate(cfg.protocol.matrices or []):
        if not cfg.resolve(m).is_file():
            raise ConfigError(f"protocol.matrices[{k}]", f"file not found: {m}")
    if cfg.protocol.oam_labels is not None and len(cfg.protocol.oam_labels) != cfg.protocol.dimension:
        raise ConfigError("protocol.oam_labels", "length must equal protocol.dimension")
    for path, build in (("medium", cfg.medium_spec), ("grid", cfg.grid_spec),
                        ("characterize.gsa", cfg.gsa_options)):
        try:
            build()
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None


def from_mapping(doc, base_dir=".") -> ExperimentConfig:
    cfg = _build(ExperimentConfig, doc)
    cfg.base_dir = str(base_dir)
    _check(cfg)
    return cfg


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a YAML config (or the defaults when ``path`` is None) and apply overrides."""
    doc, base = {}, Path(".")
    if path is not None:
        path = Path(path)
        try:
            doc = yaml.safe_load(path.read_text()) or {}
        except OSError as exc:
            raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError("", f"{path} is not valid YAML: {exc}") from None
        base = path.parent
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    return from_mapping(doc, base)
