"""Training-loss algebra for the depth / residual / direct branches.

Every function takes plain arrays or floats so any trainer can call it.
Pair losses mix an L1 term with an SSIM term; totals combine pair losses
either as plain sums or as convex combinations with learned weights.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .metrics import ssim

DEFAULT_LAMBDA = 0.1
DEFAULT_DEPTH_MAX = 10.0


def l1_mean(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))


def ssim_loss(a, b) -> float:
    """``(1 - SSIM) / 2``, in [0, 1]."""
    return ssim_to_loss(ssim(a, b))


def ssim_to_loss(s: float) -> float:
    return (1.0 - s) / 2.0


def pair_loss_fixed(a, b, lambda1: float = DEFAULT_LAMBDA, lambda2: float = DEFAULT_LAMBDA) -> float:
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("loss weights must be non-negative")
    return lambda1 * l1_mean(a, b) + lambda2 * ssim_loss(a, b)


def _check_unit(w, name="w"):
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {w}")


def pair_loss_weighted(a, b, w: float) -> float:
    """``w * L1 + (1 - w) * SSIM-loss`` with a sigmoid-range weight."""
    _check_unit(w)
    return w * l1_mean(a, b) + (1.0 - w) * ssim_loss(a, b)


def depth_transform(y_orig, m: float = DEFAULT_DEPTH_MAX) -> np.ndarray:
    """Reciprocal depth target ``m / y``; applying it twice returns the input."""
    if not m > 0:
        raise ValueError("m must be positive")
    y = np.asarray(y_orig, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("depth must be strictly positive")
    return m / y


def residual_compose(i_initial, residue) -> np.ndarray:
    """Initial degraded image plus predicted residue, unclamped.

    For planes holding float32-precision values (as stored in ``.f32``
    files) the float64 sum is exact, so subtracting ``i_initial`` again
    returns ``residue`` bit for bit.
    """
    i_initial = np.asarray(i_initial, dtype=np.float64)
    residue = np.asarray(residue, dtype=np.float64)
    if i_initial.shape != residue.shape:
        raise ValueError(f"dimension mismatch: {i_initial.shape} vs {residue.shape}")
    return i_initial + residue


def _check_components(components):
    comps = [float(c) for c in components]
    if any(c < 0 for c in comps):
        raise ValueError("loss components must be non-negative")
    return comps


def total_technique1(l_d: float, l_p: float) -> float:
    return sum(_check_components((l_d, l_p)))


def total_technique2(l_d: float, l_p: float, l_t: float) -> float:
    return sum(_check_components((l_d, l_p, l_t)))


def total_technique3(l_d: float, l_p: float, l_t: float, l_g: float) -> float:
    return sum(_check_components((l_d, l_p, l_t, l_g)))


def total_variant2(components: Sequence[float], w: Sequence[float]) -> float:
    """Convex combination: ``sum(w_i * L_i) + (1 - sum(w)) * L_last``.

    With four components the last one is the direct-branch loss.
    """
    comps = _check_components(components)
    w = [float(v) for v in w]
    if len(w) != len(comps) - 1:
        raise ValueError(f"need {len(comps) - 1} weights for {len(comps)} components, got {len(w)}")
    if any(v < 0 for v in w):
        raise ValueError("weights must be non-negative")
    rest = 1.0 - sum(w)
    if rest < -1e-12:
        raise ValueError(f"weights sum to {sum(w)} > 1")
    rest = max(rest, 0.0)
    return sum(wi * ci for wi, ci in zip(w, comps)) + rest * comps[-1]


def batch_mean_weight(per_image_weights: Sequence[float]) -> float:
    """Mean of per-image weights over a batch."""
    vals = [float(v) for v in per_image_weights]
    if not vals:
        raise ValueError("empty weight list")
    for v in vals:
        _check_unit(v, "per-image weight")
    return float(np.mean(vals))


def softmax(logits: Sequence[float]) -> np.ndarray:
    """Stable softmax, for turning raw head outputs into simplex weights."""
    x = np.asarray(logits, dtype=np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()
