"""Particle layer and turbidity blend.

The particle layer ``SP`` starts black; each pixel of channel ``c`` becomes a
particle of value ``sp_col[c]`` with probability ``pr[c]`` (one uniform draw
per pixel, row-major, from the channel's own substream). Each channel is
then blurred with a Gaussian of deviation ``sigma[c]`` truncated at 3 sigma,
with weights renormalized over in-frame taps at the borders. The final image
is ``u * I_sct + (1 - u) * SP``.

With ``bipolar=True`` the roles flip: the background is ``sp_col`` and
particles are black.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .imaging import as_image
from .rng import RngStream


@dataclass(frozen=True)
class TurbidityParams:
    u: float
    sp_col: tuple[float, float, float]
    pr: tuple[float, float, float]
    sigma: tuple[float, float, float]
    bipolar: bool = False

    def __post_init__(self):
        sp_col = tuple(float(v) for v in self.sp_col)
        pr = tuple(float(v) for v in self.pr)
        sigma = tuple(float(v) for v in self.sigma)
        if len(sp_col) != 3 or len(pr) != 3 or len(sigma) != 3:
            raise ValueError("sp_col, pr and sigma need exactly three channels")
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"u must lie in [0, 1], got {self.u}")
        if not all(0.0 <= v <= 1.0 for v in sp_col + pr):
            raise ValueError("sp_col and pr must lie in [0, 1]")
        if not all(s >= 0 and math.isfinite(s) for s in sigma):
            raise ValueError("sigma must be non-negative")
        object.__setattr__(self, "sp_col", sp_col)
        object.__setattr__(self, "pr", pr)
        object.__setattr__(self, "sigma", sigma)


def gaussian_blur_renormalized(plane: np.ndarray, sigma: float, truncate: float = 3.0) -> np.ndarray:
    """Separable Gaussian blur whose weights sum to 1 over the in-frame taps."""
    plane = np.asarray(plane, dtype=np.float64)
    if sigma == 0:
        return plane.copy()
    r = max(1, int(math.ceil(truncate * sigma)))
    d = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(d**2) / (2.0 * sigma**2))
    g /= g.sum()
    out = plane
    for axis in (0, 1):
        num = correlate1d(out, g, axis=axis, mode="constant", cval=0.0)
        den = correlate1d(np.ones_like(out), g, axis=axis, mode="constant", cval=0.0)
        out = num / den
    return out


def particle_mask(shape: tuple[int, int], pr: float, stream: RngStream) -> np.ndarray:
    h, w = shape
    return stream.uniform(h * w).reshape(h, w) < pr


def make_particle_layer(shape: tuple[int, int], params: TurbidityParams, rng: RngStream) -> np.ndarray:
    """Blurred salt-and-pepper particle image, shape (H, W, 3)."""
    h, w = shape
    layer = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        hits = particle_mask((h, w), params.pr[c], rng.child(c))
        if params.bipolar:
            plane = np.where(hits, 0.0, params.sp_col[c])
        else:
            plane = np.where(hits, params.sp_col[c], 0.0)
        layer[:, :, c] = gaussian_blur_renormalized(plane, params.sigma[c])
    return layer


def blend_turbidity(i_sct: np.ndarray, sp: np.ndarray, u: float) -> np.ndarray:
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    i_sct = as_image(i_sct, "i_sct")
    sp = as_image(sp, "sp")
    if i_sct.shape != sp.shape:
        raise ValueError(f"dimension mismatch: {i_sct.shape} vs {sp.shape}")
    if u == 1.0:
        return i_sct.copy()
    if u == 0.0:
        return sp.copy()
    return u * i_sct + (1.0 - u) * sp
