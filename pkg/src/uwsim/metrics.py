"""Depth-error metrics and SSIM.

All reductions accumulate in float64. ``delta_accuracy`` uses a strict
``<`` against ``1.25**i``.

SSIM follows Wang et al. (2004): an 11×11 Gaussian window with deviation
1.5 evaluated only where it fits inside the image ("valid" region),
``C1 = (0.01 L)^2`` and ``C2 = (0.03 L)^2``. Multichannel inputs average the
per-channel SSIM.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ValueError(f"dimension mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise ValueError("empty input")
    return y, y_hat


def _require_positive(arr, name):
    if np.any(arr <= 0):
        raise ValueError(f"{name} must be strictly positive")


def rel_error(y, y_hat) -> float:
    """Mean of ``|y - y_hat| / y``; not symmetric."""
    y, y_hat = _pair(y, y_hat)
    _require_positive(y, "y")
    return float(np.mean(np.abs(y - y_hat) / y))


def rms_error(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def log10_error(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    _require_positive(y, "y")
    _require_positive(y_hat, "y_hat")
    return float(np.mean(np.abs(np.log10(y) - np.log10(y_hat))))


def delta_accuracy(y, y_hat, i: int) -> float:
    if i not in (1, 2, 3):
        raise ValueError("threshold index must be 1, 2 or 3")
    y, y_hat = _pair(y, y_hat)
    _require_positive(y, "y")
    _require_positive(y_hat, "y_hat")
    ratio = np.maximum(y / y_hat, y_hat / y)
    return float(np.mean(ratio < 1.25**i))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian taps."""
    d = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(d**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(plane: np.ndarray, g: np.ndarray) -> np.ndarray:
    n = g.size
    rows = sliding_window_view(plane, n, axis=0) @ g
    return sliding_window_view(rows, n, axis=1) @ g


def _ssim_plane(a: np.ndarray, b: np.ndarray, g: np.ndarray, c1: float, c2: float) -> float:
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    var_a = _filter_valid(a * a, g) - mu_aa
    var_b = _filter_valid(b * b, g) - mu_bb
    cov = _filter_valid(a * b, g) - mu_ab
    num = (2.0 * mu_ab + c1) * (2.0 * cov + c2)
    den = (mu_aa + mu_bb + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, data_range: float = 1.0) -> float:
    a, b = _pair(a, b)
    if a.ndim not in (2, 3):
        raise ValueError(f"ssim expects (H, W) or (H, W, C) planes, got {a.shape}")
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ValueError(
            f"window of {SSIM_WINDOW}x{SSIM_WINDOW} is larger than image {a.shape[0]}x{a.shape[1]}"
        )
    g = gaussian_window()
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    if a.ndim == 2:
        return _ssim_plane(a, b, g, c1, c2)
    vals = [_ssim_plane(a[:, :, c], b[:, :, c], g, c1, c2) for c in range(a.shape[2])]
    return float(np.mean(vals))


@dataclass
class MetricsReport:
    """One evaluated pair. Ratio metrics are ``None`` when the truth has non-positive values."""

    rel: float | None
    rms: float
    log10_err: float | None
    delta1: float | None
    delta2: float | None
    delta3: float | None
    ssim: float | None
    n_pixels: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_line(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.to_dict().items())


def evaluate_pair(y, y_hat, mask=None, with_ssim: bool = True) -> MetricsReport:
    """Every metric for one truth/prediction pair.

    ``mask`` restricts the pixel-wise metrics (e.g. to a depth cap); SSIM is
    always computed on the full planes, and skipped when they are smaller
    than the window. Ratio metrics are ``None`` unless both planes are
    strictly positive on the evaluated pixels.
    """
    y, y_hat = _pair(y, y_hat)
    ssim_val = None
    if with_ssim and y.ndim in (2, 3) and min(y.shape[:2]) >= SSIM_WINDOW:
        ssim_val = ssim(y, y_hat)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != y.shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match {y.shape[:2]}")
        n_pixels = int(mask.sum())
        if n_pixels == 0:
            raise ValueError("no pixels left to evaluate")
        y, y_hat = y[mask], y_hat[mask]
    else:
        n_pixels = int(y.shape[0] * y.shape[1]) if y.ndim >= 2 else int(y.size)
    positive = bool(np.all(y > 0) and np.all(y_hat > 0))
    return MetricsReport(
        rel=rel_error(y, y_hat) if positive else None,
        rms=rms_error(y, y_hat),
        log10_err=log10_error(y, y_hat) if positive else None,
        delta1=delta_accuracy(y, y_hat, 1) if positive else None,
        delta2=delta_accuracy(y, y_hat, 2) if positive else None,
        delta3=delta_accuracy(y, y_hat, 3) if positive else None,
        ssim=ssim_val,
        n_pixels=n_pixels,
    )


def aggregate(reports: list[MetricsReport]) -> dict:
    """Unweighted means over reports; a metric missing from any report stays missing."""
    out: dict = {"count": len(reports)}
    if not reports:
        return out
    for key in ("rel", "rms", "log10_err", "delta1", "delta2", "delta3", "ssim"):
        vals = [getattr(r, key) for r in reports]
        out[key] = None if any(v is None for v in vals) else float(np.mean(vals))
    out["n_pixels"] = int(sum(r.n_pixels for r in reports))
    return out
