"""Small procedural RGB-D scenes for smoke tests and demos."""

from __future__ import annotations

import numpy as np


def textured_image(h: int, w: int, seed: int = 0) -> np.ndarray:
    """Smooth colored texture with mild noise, values in [0, 1]."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    phase = np.arange(3, dtype=np.float64)
    base = 0.5 + 0.35 * np.sin(0.31 * xx[..., None] + phase) * np.cos(0.23 * yy[..., None] - 0.5 * phase)
    return np.clip(base + 0.1 * rng.random((h, w, 3)), 0.0, 1.0)


def depth_ramp(h: int, w: int, z_min: float = 0.4, z_max: float = 10.0) -> np.ndarray:
    """Depth increasing linearly along both axes from ``z_min`` to ``z_max``."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    frac = (xx / max(w - 1, 1) + yy / max(h - 1, 1)) / 2.0
    return z_min + (z_max - z_min) * frac


def depth_levels(h: int, w: int, levels, seed: int = 0) -> np.ndarray:
    """Piecewise-constant depth: 4×4 blocks each set to one of ``levels``."""
    rng = np.random.default_rng(seed)
    levels = np.asarray(levels, dtype=np.float64)
    blocks = rng.integers(0, levels.size, size=(-(-h // 4), -(-w // 4)))
    return np.kron(levels[blocks], np.ones((4, 4)))[:h, :w]


def smoke_scene(seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """32×32 scene whose depths sit on four equally spaced levels (1-4 m)."""
    return textured_image(32, 32, seed), depth_levels(32, 32, (1.0, 2.0, 3.0, 4.0), seed)
