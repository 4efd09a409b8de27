"""Depth images, scale-agnostic normalization, and 16-bit file quantization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cameras import Intrinsics
from .errors import DomainError
from .pngio import read_png, write_png

UNITS_METRIC = "metric_m"
UNITS_NORMALIZED = "normalized"

# stored uint16 = round(normalized_depth * DEPTH_SCALE); 0 marks invalid
DEPTH_SCALE = 10000


@dataclass
class DepthImage:
    data: np.ndarray  # (H, W) float64, 0 at invalid pixels
    valid: np.ndarray  # (H, W) bool
    units: str
    intrinsics: Intrinsics

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.data.shape != self.valid.shape:
            raise DomainError("depth data and validity mask shapes differ")
        if self.data.shape != (self.intrinsics.height, self.intrinsics.width):
            raise DomainError("depth shape does not match intrinsics")
        if self.units not in (UNITS_METRIC, UNITS_NORMALIZED):
            raise DomainError(f"unknown depth units '{self.units}'")
        if np.any(self.data[self.valid] <= 0):
            raise DomainError("valid pixels must carry positive depth")
        # invalid pixels carry the 0 sentinel
        self.data = np.where(self.valid, self.data, 0.0)


def normalize_depth(depth: DepthImage, diagonal: float) -> DepthImage:
    """Divide metric depth by the object's bounding-box diagonal."""
    if depth.units != UNITS_METRIC:
        raise DomainError("normalize_depth expects metric input")
    if not (diagonal > 0):
        raise DomainError(f"diagonal must be positive, got {diagonal}")
    return DepthImage(
        data=depth.data / diagonal,
        valid=depth.valid.copy(),
        units=UNITS_NORMALIZED,
        intrinsics=depth.intrinsics,
    )


def denormalize_depth(depth: DepthImage, diagonal: float) -> DepthImage:
    """Exact inverse of :func:`normalize_depth`."""
    if depth.units != UNITS_NORMALIZED:
        raise DomainError("denormalize_depth expects normalized input")
    if not (diagonal > 0):
        raise DomainError(f"diagonal must be positive, got {diagonal}")
    return DepthImage(
        data=depth.data * diagonal,
        valid=depth.valid.copy(),
        units=UNITS_METRIC,
        intrinsics=depth.intrinsics,
    )


def quantize_depth(depth: DepthImage) -> np.ndarray:
    """Normalized depth -> uint16 image (1e-4 resolution, 0 = invalid)."""
    if depth.units != UNITS_NORMALIZED:
        raise DomainError("only normalized depth is quantized for storage")
    codes = np.rint(depth.data * DEPTH_SCALE)
    if np.any(codes[depth.valid] > 65535):
        raise DomainError("normalized depth exceeds the 16-bit storage range")
    # a positive depth must never quantize to the invalid sentinel
    codes = np.where(depth.valid, np.maximum(codes, 1), 0)
    return codes.astype(np.uint16)


def dequantize_depth(codes: np.ndarray, intrinsics: Intrinsics) -> DepthImage:
    codes = np.asarray(codes)
    return DepthImage(
        data=codes.astype(np.float64) / DEPTH_SCALE,
        valid=codes > 0,
        units=UNITS_NORMALIZED,
        intrinsics=intrinsics,
    )


def save_depth_png(path: str | Path, depth: DepthImage) -> None:
    write_png(path, quantize_depth(depth))


def load_depth_png(path: str | Path, intrinsics: Intrinsics) -> DepthImage:
    return dequantize_depth(read_png(path), intrinsics)
