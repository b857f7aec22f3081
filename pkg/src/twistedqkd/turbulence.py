"""Random Zernike phase screens and their AR(1) evolution in time."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .zernike import PhaseScreen, ZernikeSpectrum, synthesize


@dataclass(frozen=True)
class TurbulenceModel:
    """Independent Gaussian statistics per Zernike index (radians).

    ``terms`` holds ``(j, mean, std)``; piston is not allowed since a global
    phase is unobservable.
    """

    terms: tuple[tuple[int, float, float], ...]
    update_rate: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        terms = tuple((int(j), float(mu), float(sd)) for j, mu, sd in self.terms)
        js = [j for j, _, _ in terms]
        if len(set(js)) != len(js):
            raise ValueError("duplicate Zernike index in turbulence model")
        if any(j < 2 for j in js):
            raise ValueError("turbulence terms start at j=2 (piston is excluded)")
        if any(sd < 0 for _, _, sd in terms):
            raise ValueError("standard deviations must be non-negative")
        if not self.update_rate > 0:
            raise ValueError("update_rate must be positive")
        object.__setattr__(self, "terms", terms)

    @property
    def indices(self) -> np.ndarray:
        return np.array([j for j, _, _ in self.terms], dtype=int)

    @property
    def means(self) -> np.ndarray:
        return np.array([mu for _, mu, _ in self.terms])

    @property
    def stds(self) -> np.ndarray:
        return np.array([sd for _, _, sd in self.terms])

    def scaled(self, factor: float) -> "TurbulenceModel":
        """Same model with every mean and std multiplied by ``factor``."""
        return TurbulenceModel(tuple((j, factor * mu, factor * sd) for j, mu, sd in self.terms),
                               self.update_rate, self.rng_seed)

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Independent generator for ``stream``; same seed and stream, same draws."""
        return np.random.default_rng([self.rng_seed, stream])

    @classmethod
    def from_mapping(cls, doc: dict) -> "TurbulenceModel":
        terms = tuple((t["j"], t.get("mean", 0.0), t.get("std", 0.0)) for t in doc["terms"])
        return cls(terms, doc.get("update_rate", 10.0), doc.get("rng_seed", 0))

    def to_mapping(self) -> dict:
        return {"update_rate": self.update_rate, "rng_seed": self.rng_seed,
                "terms": [{"j": j, "mean": mu, "std": sd} for j, mu, sd in self.terms]}


def load_model(path) -> TurbulenceModel:
    """Read a model from YAML or JSON."""
    text = Path(path).read_text()
    doc = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    try:
        return TurbulenceModel.from_mapping(doc)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"{path}: expected 'terms' as a list of {{j, mean, std}} mappings "
                         f"({type(exc).__name__}: {exc})") from None


def default_model() -> TurbulenceModel:
    """Illustrative astigmatism-dominated model shipped with the package."""
    text = resources.files("twistedqkd").joinpath("data/default_turbulence.yaml").read_text()
    return TurbulenceModel.from_mapping(yaml.safe_load(text))


def draw_coefficients(model: TurbulenceModel, rng: np.random.Generator, size: int | None = None):
    shape = (len(model.terms),) if size is None else (size, len(model.terms))
    return model.means + model.stds * rng.standard_normal(shape)


def sample_screen(model: TurbulenceModel, grid, aperture_radius: float,
                  rng: np.random.Generator) -> tuple[PhaseScreen, ZernikeSpectrum]:
    coeffs = draw_coefficients(model, rng)
    spectrum = ZernikeSpectrum(tuple(zip(model.indices.tolist(), coeffs.tolist())), aperture_radius)
    return synthesize(spectrum, grid), spectrum


def ar1_coefficient(model: TurbulenceModel, correlation_time: float) -> float:
    if not correlation_time > 0:
        raise ValueError("correlation_time must be positive")
    return float(np.exp(-1.0 / (model.update_rate * correlation_time)))


def coefficient_sequence(model: TurbulenceModel, n_frames: int, correlation_time: float,
                         rng: np.random.Generator) -> np.ndarray:
    """``(n_frames, n_terms)`` AR(1) coefficient series started in its stationary law.

    Consecutive frames are ``1/update_rate`` apart and correlate as
    ``exp(-dt / correlation_time)``.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    rho = ar1_coefficient(model, correlation_time)
    innovation = np.sqrt(max(0.0, 1.0 - rho ** 2))
    mean, std = model.means, model.stds
    noise = rng.standard_normal((n_frames, len(model.terms)))
    out = np.empty_like(noise)
    out[0] = noise[0]
    for t in range(1, n_frames):
        out[t] = rho * out[t - 1] + innovation * noise[t]
    return mean + std * out


def spectrum_sequence(model: TurbulenceModel, n_frames: int, correlation_time: float,
                      aperture_radius: float, rng: np.random.Generator) -> list[ZernikeSpectrum]:
    coeffs = coefficient_sequence(model, n_frames, correlation_time, rng)
    js = model.indices.tolist()
    return [ZernikeSpectrum(tuple(zip(js, row.tolist())), aperture_radius) for row in coeffs]


def screen_sequence(model: TurbulenceModel, n_frames: int, correlation_time: float, grid,
                    aperture_radius: float, rng: np.random.Generator) -> list[PhaseScreen]:
    """Frozen-screen snapshots of the evolving turbulence, one per update tick."""
    spectra = spectrum_sequence(model, n_frames, correlation_time, aperture_radius, rng)
    return [synthesize(s, grid) for s in spectra]
