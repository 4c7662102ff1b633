"""Forward-scattering image formation.

Each clean pixel x' is a radiance source. A fraction ``k_c(x')`` of its
radiance is scattered and spread over the image plane by an isotropic
Gaussian of width ``sigma = gamma_c * z(x')`` pixels; the rest travels
straight to the camera:

    J_sct_c(x) = sum_{x'} k_c(x') J_c(x') G_c(x, x')
    I_sct_c(x) = (J_sct_c(x) + (1 - k_c(x)) J_c(x)) t_c(x) + (1 - t_c(x)) A_c

with ``k_c = exp(-alpha_c z)``. Sources narrower than ``delta_sigma_eps``
pixels deposit everything on their own pixel. Kernels are truncated to the
square ``|dx|, |dy| <= floor(kernel_cutoff * sigma)`` and photons leaving the
frame are lost.

Two evaluators are provided. :func:`scattered_radiance_oracle` sums every
source exactly with its own width. :func:`scattered_radiance_fast` quantizes
source depths into bins and runs one separable convolution per bin; it is
exact when every depth sits on a bin center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .imaging import as_depth, as_image, check_pair
from .optics import WaterProfile, degrade_classic, transmission

NORMALIZATION_MODES = ("verbatim", "normalized")
K_SEMANTICS = ("equation", "prose")
BIN_STRATEGIES = ("uniform", "quantile")


@dataclass(frozen=True)
class ScatterParams:
    """Scattering density ``alpha`` (1/m) and diffusion width ``gamma`` (px of sigma per m)."""

    alpha: tuple[float, float, float]
    gamma: tuple[float, float, float]
    kernel_cutoff: float = 3.0
    normalization_mode: str = "verbatim"
    delta_sigma_eps: float = 0.25

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        gamma = tuple(float(g) for g in self.gamma)
        if len(alpha) != 3 or len(gamma) != 3:
            raise ValueError("alpha and gamma need exactly three channels")
        if any(a < 0 for a in alpha):
            raise ValueError(f"alpha must be non-negative, got {alpha}")
        if any(not g > 0 for g in gamma):
            raise ValueError(f"gamma must be positive, got {gamma}")
        if not self.kernel_cutoff >= 1:
            raise ValueError("kernel_cutoff must be >= 1")
        if self.normalization_mode not in NORMALIZATION_MODES:
            raise ValueError(f"normalization_mode must be one of {NORMALIZATION_MODES}")
        if not self.delta_sigma_eps > 0:
            raise ValueError("delta_sigma_eps must be positive")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)


def scatter_likelihood(depth: np.ndarray, params: ScatterParams) -> np.ndarray:
    """``k_c(x) = exp(-alpha_c z(x))``, shape (H, W, 3)."""
    z = as_depth(depth)
    if np.any(z <= 0):
        raise ValueError("depth must be positive")
    return np.exp(-z[:, :, None] * np.asarray(params.alpha))


def scatter_weight(k: np.ndarray, semantics: str = "equation") -> np.ndarray:
    """Fraction of source radiance routed into the scattered term.

    ``"equation"`` uses ``k`` as written in the image-formation equations.
    ``"prose"`` treats ``k`` as the straight-path probability, so the
    scattered fraction is ``1 - k``.
    """
    if semantics == "equation":
        return k
    if semantics == "prose":
        return 1.0 - k
    raise ValueError(f"semantics must be one of {K_SEMANTICS}")


def kernel_prefactor(sigma, mode: str):
    if mode == "verbatim":
        return 1.0 / (2.0 * math.pi * sigma)
    if mode == "normalized":
        return 1.0 / (2.0 * math.pi * sigma**2)
    raise ValueError(f"normalization mode must be one of {NORMALIZATION_MODES}")


def kernel_radius(sigma, cutoff: float):
    return np.floor(cutoff * np.asarray(sigma)).astype(np.int64)


def gauss_kernel_value(x, x_src, z_src: float, gamma_c: float, mode: str = "verbatim") -> float:
    """Likelihood that a photon scattered at ``x_src`` (depth ``z_src``) lands on ``x``."""
    sigma = gamma_c * z_src
    if not sigma > 0:
        raise ValueError(f"kernel width must be positive, got {sigma}")
    d2 = (x_src[0] - x[0]) ** 2 + (x_src[1] - x[1]) ** 2
    return kernel_prefactor(sigma, mode) * math.exp(-d2 / (2.0 * sigma**2))


def discrete_kernel(sigma: float, cutoff: float = 3.0, mode: str = "normalized") -> np.ndarray:
    """Sampled, truncated 2-D kernel on ``[-r, r]^2`` with ``r = floor(cutoff*sigma)``."""
    r = int(kernel_radius(sigma, cutoff))
    d = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(d**2) / (2.0 * sigma**2))
    return kernel_prefactor(sigma, mode) * np.outer(g, g)


def _check_inputs(clean, depth, k):
    clean = as_image(clean, "clean")
    z = as_depth(depth)
    check_pair(clean, z)
    k = np.asarray(k, dtype=np.float64)
    if k.shape != clean.shape:
        raise ValueError(f"dimension mismatch: clean {clean.shape}, k {k.shape}")
    return clean, z, k


def scattered_radiance_oracle(clean, depth, k, params: ScatterParams) -> np.ndarray:
    """Exact scattered radiance: every source spreads with its own width.

    The sum is organized offset by offset (vectorized over sources) in a
    fixed order, which is the same set of terms as a double loop over
    (target, source) pairs restricted to each source's support.
    """
    clean, z, k = _check_inputs(clean, depth, k)
    h, w, _ = clean.shape
    out = np.zeros_like(clean)
    for c in range(3):
        src = k[:, :, c] * clean[:, :, c]
        sigma = params.gamma[c] * z
        point = sigma < params.delta_sigma_eps
        out[:, :, c] += np.where(point, src, 0.0)
        spread = ~point
        if not spread.any():
            continue
        sig = np.where(spread, sigma, 1.0)
        radius = np.where(spread, kernel_radius(sig, params.kernel_cutoff), -1)
        pref = np.where(spread, kernel_prefactor(sig, params.normalization_mode), 0.0)
        inv2s2 = 1.0 / (2.0 * sig**2)
        rmax = int(radius.max())
        acc = out[:, :, c]
        for dy in range(-rmax, rmax + 1):
            for dx in range(-rmax, rmax + 1):
                reach = max(abs(dy), abs(dx))
                # source rows/cols whose target (y+dy, x+dx) stays in frame
                sy = slice(max(0, -dy), min(h, h - dy))
                sx = slice(max(0, -dx), min(w, w - dx))
                ty = slice(max(0, dy), min(h, h + dy))
                tx = slice(max(0, dx), min(w, w + dx))
                if sy.start >= sy.stop or sx.start >= sx.stop:
                    continue
                rad = radius[sy, sx]
                live = rad >= reach
                if not live.any():
                    continue
                wgt = pref[sy, sx] * np.exp(-(dy * dy + dx * dx) * inv2s2[sy, sx])
                acc[ty, tx] += np.where(live, src[sy, sx] * wgt, 0.0)
    return out


def bin_centers(z: np.ndarray, bins: int, strategy: str = "uniform") -> np.ndarray:
    """Representative depths for the fast path.

    ``uniform`` places ``bins`` equally spaced nodes over the observed depth
    range (endpoints included); ``quantile`` places them at equally spaced
    quantiles. A single bin sits at the midpoint (uniform) or median.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    z = np.asarray(z, dtype=np.float64)
    lo, hi = float(z.min()), float(z.max())
    if strategy == "uniform":
        if bins == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(lo, hi, bins)
    if strategy == "quantile":
        if bins == 1:
            return np.array([float(np.median(z))])
        return np.quantile(z, np.linspace(0.0, 1.0, bins))
    raise ValueError(f"bin strategy must be one of {BIN_STRATEGIES}")


def assign_bins(z: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center per pixel (ties go to the lower index)."""
    return np.argmin(np.abs(z[..., None] - centers), axis=-1)


def _separable_gaussian(src: np.ndarray, sigma: float, cutoff: float) -> np.ndarray:
    r = int(kernel_radius(sigma, cutoff))
    d = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(d**2) / (2.0 * sigma**2))
    tmp = correlate1d(src, g, axis=0, mode="constant", cval=0.0)
    return correlate1d(tmp, g, axis=1, mode="constant", cval=0.0)


def scattered_radiance_fast(
    clean,
    depth,
    k,
    params: ScatterParams,
    bins: int = 8,
    strategy: str = "uniform",
    centers=None,
) -> np.ndarray:
    """Depth-binned approximation of :func:`scattered_radiance_oracle`.

    ``centers`` overrides the bin placement chosen by ``strategy``.
    """
    clean, z, k = _check_inputs(clean, depth, k)
    if centers is None:
        centers = bin_centers(z, bins, strategy)
    else:
        centers = np.asarray(centers, dtype=np.float64).ravel()
        if centers.size < 1:
            raise ValueError("need at least one bin center")
    labels = assign_bins(z, centers)
    out = np.zeros_like(clean)
    for c in range(3):
        src = k[:, :, c] * clean[:, :, c]
        for b, zc in enumerate(centers):
            mask = labels == b
            if not mask.any():
                continue
            masked = np.where(mask, src, 0.0)
            sigma = params.gamma[c] * zc
            if sigma < params.delta_sigma_eps:
                out[:, :, c] += masked
                continue
            pref = kernel_prefactor(sigma, params.normalization_mode)
            out[:, :, c] += pref * _separable_gaussian(masked, sigma, params.kernel_cutoff)
    return out


def compose_scattered(clean, j_sct, k, t, profile: WaterProfile) -> np.ndarray:
    """Scattered plus direct radiance, attenuated, plus veiling light. Not clamped."""
    clean = as_image(clean, "clean")
    for name, arr in (("j_sct", j_sct), ("k", k), ("t", t)):
        if np.shape(arr) != clean.shape:
            raise ValueError(f"dimension mismatch: clean {clean.shape}, {name} {np.shape(arr)}")
    j_sct = np.asarray(j_sct, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    a = np.asarray(profile.veiling, dtype=np.float64)
    return (j_sct + (1.0 - k) * clean) * t + (1.0 - t) * a


def simulate_scattered(
    clean,
    depth,
    profile: WaterProfile,
    params: ScatterParams,
    *,
    exact: bool = False,
    bins: int = 8,
    strategy: str = "uniform",
    semantics: str = "equation",
) -> dict[str, np.ndarray]:
    """Full scattering pipeline; returns every intermediate plane."""
    clean = as_image(clean, "clean")
    z = as_depth(depth)
    check_pair(clean, z)
    t = transmission(z, profile)
    k = scatter_weight(scatter_likelihood(z, params), semantics)
    if exact:
        j_sct = scattered_radiance_oracle(clean, z, k, params)
    else:
        j_sct = scattered_radiance_fast(clean, z, k, params, bins=bins, strategy=strategy)
    return {
        "transmission": t,
        "k": k,
        "j_sct": j_sct,
        "initial": degrade_classic(clean, t, profile),
        "scattered": compose_scattered(clean, j_sct, k, t, profile),
    }
