"""Classical attenuation + veiling-light image formation.

    t_c(x) = exp(-beta_c * z(x))
    I_c(x) = t_c(x) * J_c(x) + (1 - t_c(x)) * A_c
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .imaging import as_depth, as_image, check_pair

OCEANIC_TYPES = ("I", "IA", "IB", "II", "III")


@dataclass(frozen=True)
class WaterProfile:
    beta: tuple[float, float, float]
    veiling: tuple[float, float, float]
    name: str | None = None

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        veiling = tuple(float(a) for a in self.veiling)
        if len(beta) != 3 or len(veiling) != 3:
            raise ValueError("beta and veiling need exactly three channels")
        if not all(b > 0 and math.isfinite(b) for b in beta):
            raise ValueError(f"attenuation coefficients must be positive, got {beta}")
        if not all(0.0 <= a <= 1.0 for a in veiling):
            raise ValueError(f"veiling light must lie in [0, 1], got {veiling}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "veiling", veiling)

    def with_veiling(self, veiling) -> "WaterProfile":
        return replace(self, veiling=tuple(veiling))

    def to_dict(self) -> dict:
        return {"name": self.name, "beta": list(self.beta), "veiling": list(self.veiling)}


def transmission(depth: np.ndarray, profile: WaterProfile) -> np.ndarray:
    """Per-channel transmission map, shape (H, W, 3), values in (0, 1]."""
    z = as_depth(depth)
    beta = np.asarray(profile.beta, dtype=np.float64)
    return np.exp(-z[:, :, None] * beta)


def degrade_classic(clean: np.ndarray, t: np.ndarray, profile: WaterProfile) -> np.ndarray:
    """Attenuated signal plus veiling light."""
    clean = as_image(clean, "clean")
    t = np.asarray(t, dtype=np.float64)
    if t.shape != clean.shape:
        raise ValueError(f"dimension mismatch: clean {clean.shape}, transmission {t.shape}")
    a = np.asarray(profile.veiling, dtype=np.float64)
    return t * clean + (1.0 - t) * a


def simulate_classic(clean: np.ndarray, depth: np.ndarray, profile: WaterProfile) -> np.ndarray:
    clean = as_image(clean, "clean")
    check_pair(clean, as_depth(depth))
    return degrade_classic(clean, transmission(depth, profile), profile)


def _parse_presets(text: str, source: str) -> dict[str, WaterProfile]:
    presets = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        fields = body.split()
        if len(fields) != 7:
            raise ValueError(f"{source}:{lineno}: expected 7 fields, found {len(fields)}")
        name, *nums = fields
        vals = [float(v) for v in nums]
        presets[name] = WaterProfile(tuple(vals[:3]), tuple(vals[3:]), name=name)
    return presets


def load_presets(path=None) -> dict[str, WaterProfile]:
    """Read a preset table; defaults to the bundled Jerlov table."""
    if path is None:
        text = resources.files("uwsim").joinpath("data/jerlov.txt").read_text()
        return _parse_presets(text, "jerlov.txt")
    return _parse_presets(Path(path).read_text(), str(path))


def jerlov_preset(name: str, veiling=None, path=None) -> WaterProfile:
    presets = load_presets(path)
    if name not in presets:
        raise KeyError(f"unknown water type {name!r}; valid presets: {', '.join(presets)}")
    profile = presets[name]
    if veiling is not None:
        profile = profile.with_veiling(veiling)
    return profile


def deep_water_color(beta, z_ref: float = 10.0, peak: float = 0.9) -> tuple[float, float, float]:
    """White surface seen through ``z_ref`` meters, scaled so the brightest channel is ``peak``."""
    t = np.exp(-np.asarray(beta, dtype=np.float64) * z_ref)
    return tuple(float(v) for v in peak * t / t.max())
