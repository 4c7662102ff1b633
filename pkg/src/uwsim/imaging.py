"""Image and depth containers, file I/O and resampling.

Images are ``(H, W, 3)`` float64 arrays in R, G, B order with nominal range
``[0, 1]``. Depth maps are ``(H, W)`` float64 arrays in meters.

Depth on disk is either a single-channel 16-bit PNG (scaled by a
meters-per-unit factor, millimeters by default) or a raw ``.f32`` file: an
8-byte header holding height and width as little-endian uint32, followed by
little-endian float32 samples in row-major order. A ``.f32`` payload of
``3·H·W`` samples is read as an interleaved RGB plane.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import cv2
import numpy as np

DEFAULT_DEPTH_SCALE = 0.001
DEFAULT_DEPTH_CLIP = (0.4, 10.0)


class ImageIOError(ValueError):
    """Raised when an image or depth file cannot be used; carries the path."""

    def __init__(self, path, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{path}: {reason}")


def as_image(img, name: str = "image") -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_depth(depth, name: str = "depth") -> np.ndarray:
    arr = np.asarray(depth, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have shape (H, W), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_pair(img: np.ndarray, depth: np.ndarray) -> None:
    """Reject RGB/depth pairs whose spatial dimensions disagree."""
    if img.shape[:2] != depth.shape[:2]:
        raise ValueError(
            f"dimension mismatch: image is {img.shape[0]}x{img.shape[1]}, "
            f"depth is {depth.shape[0]}x{depth.shape[1]}"
        )


def srgb_to_linear(img: np.ndarray) -> np.ndarray:
    """Inverse sRGB transfer curve (IEC 61966-2-1)."""
    img = np.asarray(img, dtype=np.float64)
    return np.where(img <= 0.04045, img / 12.92, ((img + 0.055) / 1.055) ** 2.4)


def _read_raster(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ImageIOError(path, "file not found")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIOError(path, "could not decode image")
    return raw


def _unit_scale(path, raw: np.ndarray) -> float:
    if raw.dtype == np.uint8:
        return 255.0
    if raw.dtype == np.uint16:
        return 65535.0
    raise ImageIOError(path, f"unsupported bit depth ({raw.dtype}); expected 8 or 16 bit")


def load_rgb(path) -> np.ndarray:
    """Read an 8- or 16-bit 3-channel raster as a float RGB image in [0, 1]."""
    raw = _read_raster(path)
    scale = _unit_scale(path, raw)
    if raw.ndim != 3 or raw.shape[2] != 3:
        channels = 1 if raw.ndim == 2 else raw.shape[2]
        raise ImageIOError(path, f"expected 3 channels, found {channels}")
    return raw[:, :, ::-1].astype(np.float64) / scale


def save_rgb(path, img: np.ndarray, bits: int = 16) -> None:
    """Write an RGB image as PNG; values are clamped to [0, 1] and rounded."""
    img = as_image(img)
    if bits == 16:
        q = np.round(np.clip(img, 0.0, 1.0) * 65535.0).astype(np.uint16)
    elif bits == 8:
        q = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    else:
        raise ValueError("bits must be 8 or 16")
    _write_png(path, np.ascontiguousarray(q[:, :, ::-1]))


def save_gray16(path, plane: np.ndarray) -> None:
    """Write a single-channel [0, 1] plane as a 16-bit PNG."""
    q = np.round(np.clip(as_depth(plane, "plane"), 0.0, 1.0) * 65535.0).astype(np.uint16)
    _write_png(path, q)


def _write_png(path, data: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # Fixed compression level keeps the encoded bytes reproducible.
    ok, buf = cv2.imencode(".png", data, [cv2.IMWRITE_PNG_COMPRESSION, 6])
    if not ok:
        raise ImageIOError(path, "PNG encoding failed")
    path.write_bytes(buf.tobytes())


def write_f32(path, data: np.ndarray) -> None:
    """Write a ``.f32`` plane (H×W or H×W×3) with its 8-byte dimension header."""
    arr = np.asarray(data, dtype="<f4")
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise ValueError(f"cannot write array of shape {arr.shape} as .f32")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_f32(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ImageIOError(path, "file not found")
    blob = path.read_bytes()
    if len(blob) < 8:
        raise ImageIOError(path, "truncated .f32 header")
    h, w = struct.unpack("<II", blob[:8])
    payload = np.frombuffer(blob, dtype="<f4", offset=8)
    if h == 0 or w == 0:
        raise ImageIOError(path, "zero dimension in .f32 header")
    if payload.size == h * w:
        return payload.reshape(h, w).astype(np.float64)
    if payload.size == 3 * h * w:
        return payload.reshape(h, w, 3).astype(np.float64)
    raise ImageIOError(
        path, f"payload has {payload.size} samples, header declares {h}x{w}"
    )


def load_depth(
    path,
    scale: float = DEFAULT_DEPTH_SCALE,
    clip: tuple[float, float] = DEFAULT_DEPTH_CLIP,
    expected_shape: tuple[int, int] | None = None,
) -> np.ndarray:
    """Read a depth map in meters: ``raw * scale`` clamped into ``clip``.

    ``.f32`` files hold raw values which are multiplied by ``scale`` as well;
    pass ``scale=1.0`` for planes already stored in meters.
    """
    if not scale > 0:
        raise ValueError(f"depth scale must be positive, got {scale}")
    z_min, z_max = clip
    if not 0 < z_min < z_max:
        raise ValueError(f"depth clip must satisfy 0 < z_min < z_max, got {clip}")
    if os.fspath(path).lower().endswith(".f32"):
        raw = read_f32(path)
        if raw.ndim != 2:
            raise ImageIOError(path, "depth .f32 must be a single plane")
    else:
        raw = _read_raster(path)
        if raw.ndim != 2:
            raise ImageIOError(path, "depth raster must be single-channel")
        if raw.dtype != np.uint16:
            raise ImageIOError(path, f"depth raster must be 16-bit, got {raw.dtype}")
        raw = raw.astype(np.float64)
    if expected_shape is not None and raw.shape != tuple(expected_shape):
        raise ImageIOError(
            path, f"dimension mismatch: expected {tuple(expected_shape)}, found {raw.shape}"
        )
    if not np.all(np.isfinite(raw)):
        raise ImageIOError(path, "depth contains non-finite values")
    return np.clip(raw * scale, z_min, z_max)


def save_depth16(path, depth: np.ndarray, scale: float = DEFAULT_DEPTH_SCALE) -> None:
    """Write meters as 16-bit PNG units of ``scale`` meters."""
    q = np.round(as_depth(depth) / scale)
    if q.min() < 0 or q.max() > 65535:
        raise ValueError("depth out of range for 16-bit encoding at this scale")
    _write_png(path, q.astype(np.uint16))


def downsample_half(img: np.ndarray) -> np.ndarray:
    """2×2 box average; works on (H, W) and (H, W, C) arrays with even H, W."""
    arr = np.asarray(img, dtype=np.float64)
    h, w = arr.shape[:2]
    if h % 2 or w % 2:
        raise ValueError(f"downsample_half needs even dimensions, got {h}x{w}")
    blocks = arr.reshape(h // 2, 2, w // 2, 2, *arr.shape[2:])
    return blocks.mean(axis=(1, 3))
