"""Canny edge detection: Gaussian blur, Sobel gradients, NMS, hysteresis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgio import GrayImage

DEFAULT_SIGMA = 1.4
LOW_FRACTION = 0.1
HIGH_FRACTION = 0.3

_SOBEL_SMOOTH = np.array([1.0, 2.0, 1.0])
_SOBEL_DIFF = np.array([-1.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    orientation: np.ndarray

    @property
    def width(self) -> int:
        return self.magnitude.shape[1]

    @property
    def height(self) -> int:
        return self.magnitude.shape[0]


@dataclass(frozen=True, eq=False)
class EdgeMap:
    data: np.ndarray

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def count(self) -> int:
        return int(self.data.sum())

    def __eq__(self, other):
        if not isinstance(other, EdgeMap):
            return NotImplemented
        return np.array_equal(self.data, other.data)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian of radius ceil(3*sigma)."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def _as_float(image) -> np.ndarray:
    if isinstance(image, GrayImage):
        return image.data.astype(np.float64)
    return np.asarray(image, dtype=np.float64)


def gaussian_blur(image, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders."""
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(_as_float(image), k, axis=1, mode="nearest")
    return ndimage.correlate1d(out, k, axis=0, mode="nearest")


def sobel_gradients(image) -> GradientField:
    img = _as_float(image)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"image must be at least 3x3, got shape {img.shape}")
    # gx = [[-1,0,1],[-2,0,2],[-1,0,1]]; gy is its transpose
    gx = ndimage.correlate1d(img, _SOBEL_DIFF, axis=1, mode="nearest")
    gx = ndimage.correlate1d(gx, _SOBEL_SMOOTH, axis=0, mode="nearest")
    gy = ndimage.correlate1d(img, _SOBEL_DIFF, axis=0, mode="nearest")
    gy = ndimage.correlate1d(gy, _SOBEL_SMOOTH, axis=1, mode="nearest")
    return GradientField(gx, gy, np.hypot(gx, gy), np.arctan2(gy, gx))


def image_gradients(image: GrayImage, sigma: float = DEFAULT_SIGMA) -> GradientField:
    return sobel_gradients(gaussian_blur(image, sigma))


def non_max_suppression(grad: GradientField) -> np.ndarray:
    """Boolean map of pixels that are local maxima along the quantized gradient.

    A pixel must be strictly greater than its neighbour on the negative side
    and at least equal to the one on the positive side; that keeps plateaus
    one pixel wide. The outermost frame is always False.
    """
    mag = grad.magnitude
    h, w = mag.shape
    angle = np.rad2deg(grad.orientation) % 180.0
    # bins: 0 -> 0deg, 1 -> 45deg, 2 -> 90deg, 3 -> 135deg
    sector = (np.floor((angle + 22.5) / 45.0).astype(np.int64)) % 4
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}  # (dy, dx) along +direction

    keep = np.zeros_like(mag, dtype=bool)
    centre = mag[1:-1, 1:-1]
    inner_sector = sector[1:-1, 1:-1]
    for s, (dy, dx) in offsets.items():
        fwd = mag[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        bwd = mag[1 - dy:h - 1 - dy, 1 - dx:w - 1 - dx]
        hit = (inner_sector == s) & (centre > bwd) & (centre >= fwd)
        keep[1:-1, 1:-1] |= hit
    return keep


def hysteresis(candidates: np.ndarray, mag: np.ndarray, low: float, high: float) -> np.ndarray:
    weak = candidates & (mag >= low)
    strong = weak & (mag >= high)
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return np.zeros_like(weak)
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[np.unique(labels[strong])] = True
    seeded[0] = False
    return seeded[labels]


def resolve_thresholds(max_mag: float, low: float | None, high: float | None) -> tuple[float, float]:
    low = LOW_FRACTION * max_mag if low is None else low
    high = HIGH_FRACTION * max_mag if high is None else high
    return low, high


def canny(
    image: GrayImage,
    sigma: float = DEFAULT_SIGMA,
    low: float | None = None,
    high: float | None = None,
) -> EdgeMap:
    """Canny edges. ``low``/``high`` are absolute gradient magnitudes;
    ``None`` means 0.1 / 0.3 of the image's maximum magnitude."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if low is not None and high is not None and not 0 < low < high:
        raise ValueError(f"thresholds must satisfy 0 < low < high, got low={low}, high={high}")
    grad = image_gradients(image, sigma)
    return canny_from_gradients(grad, low, high)


def canny_from_gradients(grad: GradientField, low=None, high=None) -> EdgeMap:
    max_mag = float(grad.magnitude.max())
    if max_mag == 0.0:
        return EdgeMap(np.zeros(grad.magnitude.shape, dtype=bool))
    low, high = resolve_thresholds(max_mag, low, high)
    if not 0 < low < high:
        raise ValueError(f"thresholds must satisfy 0 < low < high, got low={low}, high={high}")
    return EdgeMap(hysteresis(non_max_suppression(grad), grad.magnitude, low, high))
