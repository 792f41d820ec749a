"""The full two-slit + modified Michelson setup as one parameterized model."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import DL_SCAN, FringeSample, FringeScan
from .detection import AnalyzerSetting, coincidence_probability, derive_seed, simulate_counts
from .elements import lift_apply, mirror_tilt, roof_mirror_arm1
from .modes import TwoPhotonState, make_state_eq2, normalize

# sigma of a gaussian in units of its FWHM
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass filter in front of each detector; wavelengths in nm."""

    center_wavelength: float = 800.0
    fwhm: float = 3.0
    shape: str = "gaussian"

    def __post_init__(self):
        if self.shape != "gaussian":
            raise ConfigError(f"unsupported filter shape {self.shape!r}")
        if not self.center_wavelength > 0:
            raise ConfigError("filter center wavelength must be positive")
        if not 0 < self.fwhm < self.center_wavelength:
            raise ConfigError("filter fwhm must lie in (0, center_wavelength)")

    @property
    def sigma_l(self) -> float:
        """Gaussian width (um) of the temporal-overlap envelope in path difference.

        The filter is gaussian in optical frequency with width
        c*fwhm/center^2, so its field autocorrelation is gaussian in delay with
        sigma_L = center^2 sqrt(2 ln 2) / (pi fwhm).
        """
        return self.center_wavelength**2 / (2.0 * math.pi * FWHM_TO_SIGMA * self.fwhm) * 1e-3


@dataclass(frozen=True)
class ApparatusConfig:
    delta_l: float = 0.0                 # um
    tilt_phase: float = 0.0              # rad
    imbalance: float = math.pi / 4       # rad, pi/4 = balanced slits
    spatial_visibility: float = 1.0
    filter: FilterSpec = field(default_factory=FilterSpec)
    pair_rate: float = 1000.0            # pairs/s at the analyzers

    def __post_init__(self):
        if not 0.0 <= self.spatial_visibility <= 1.0:
            raise ConfigError("spatial_visibility must lie in [0, 1]")
        if not self.pair_rate > 0:
            raise ConfigError("pair_rate must be positive")
        if not 0.0 <= self.imbalance <= math.pi / 2:
            raise ConfigError("imbalance must lie in [0, pi/2]")
        for name in ("delta_l", "tilt_phase"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    def replace(self, **changes) -> ApparatusConfig:
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> ApparatusConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        if "filter" in kwargs:
            fdata = kwargs["filter"]
            if not isinstance(fdata, dict):
                raise ConfigError("filter must be a JSON object")
            fknown = {f.name for f in dataclasses.fields(FilterSpec)}
            funknown = set(fdata) - fknown
            if funknown:
                raise ConfigError(f"unknown filter keys: {', '.join(sorted(funknown))}")
            kwargs["filter"] = FilterSpec(**fdata)
        for k, v in kwargs.items():
            if k != "filter" and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise ConfigError(f"config field {k} must be a number")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> ApparatusConfig:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class EffectiveSource:
    """Output-path state plus the factor scaling its interference cross-terms."""

    state: TwoPhotonState
    cross_factor: float

    def __post_init__(self):
        if not 0.0 <= self.cross_factor <= 1.0:
            raise ValueError("cross_factor must lie in [0, 1]")
        if not self.state.is_normalized():
            raise ValueError("source state must be normalized")


def overlap_factor(delta_l, filter: FilterSpec = FilterSpec()):
    """Temporal overlap exp(-dl^2 / (2 sigma_L^2)); accepts scalars or arrays (um)."""
    dl = np.asarray(delta_l, dtype=float)
    g = np.exp(-(dl**2) / (2.0 * filter.sigma_l**2))
    return float(g) if g.ndim == 0 else g


def build_source(cfg: ApparatusConfig) -> EffectiveSource:
    interferometer = roof_mirror_arm1() @ mirror_tilt(cfg.tilt_phase)
    state = normalize(lift_apply(interferometer, make_state_eq2(cfg.imbalance)))
    gamma = cfg.spatial_visibility * overlap_factor(cfg.delta_l, cfg.filter)
    return EffectiveSource(state, gamma)


def scan_delta_l(
    cfg: ApparatusConfig, dl_values: Sequence[float], theta1: float, theta2: float
) -> list[tuple[float, float]]:
    """Model coincidence probability versus path difference (um); angles in radians."""
    if len(dl_values) == 0:
        raise ValueError("dl_values is empty")
    setting = AnalyzerSetting(theta1, theta2)
    base = build_source(cfg)
    out = []
    for dl in dl_values:
        gamma = cfg.spatial_visibility * overlap_factor(dl, cfg.filter)
        out.append((float(dl), coincidence_probability(EffectiveSource(base.state, gamma), setting)))
    return out


def simulate_dl_scan(
    cfg: ApparatusConfig,
    dl_values: Sequence[float],
    theta1: float,
    theta2: float,
    duration: float,
    seed: int,
) -> FringeScan:
    """Counting version of :func:`scan_delta_l` at ``cfg.pair_rate``."""
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    setting = AnalyzerSetting(theta1, theta2)
    samples = []
    for i, (dl, p) in enumerate(scan_delta_l(cfg, dl_values, theta1, theta2)):
        src = build_source(cfg.replace(delta_l=dl))
        rec = simulate_counts(src, setting, cfg.pair_rate, duration, derive_seed(seed, i))
        samples.append(FringeSample(dl, rec.coincidences, duration, rec.singles_a, rec.singles_b, p))
    return FringeScan(tuple(samples), DL_SCAN)


def load_config(path: str | Path | None) -> ApparatusConfig:
    return ApparatusConfig() if path is None else ApparatusConfig.from_json(path)
