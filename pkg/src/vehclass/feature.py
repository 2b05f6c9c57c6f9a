"""Keypoint anchoring and the fixed-pose SIFT-style descriptor.

Descriptors are Lowe's 4x4 cells x 8 orientation bins over a 16x16 window,
computed with one scale and no orientation normalization for every keypoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .edge import DEFAULT_SIGMA, EdgeMap, GradientField, canny_from_gradients, image_gradients
from .imgio import GrayImage, Mask

WINDOW = 16
HALF = WINDOW // 2
CELL = 4
N_CELLS = WINDOW // CELL
N_BINS = 8
DIM = N_CELLS * N_CELLS * N_BINS
WEIGHT_SIGMA = 8.0
CLAMP = 0.2

DEFAULT_STRIDE = 2


class Keypoint(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class FeatureParams:
    sigma: float = DEFAULT_SIGMA
    canny_low: float | None = None
    canny_high: float | None = None
    stride: int = DEFAULT_STRIDE


def _inside(x, y, width, height):
    return (x >= HALF) & (x < width - HALF) & (y >= HALF) & (y < height - HALF)


def edge_anchors(edges: EdgeMap, mask: Mask) -> list[Keypoint]:
    """Edge pixels on the foreground, clear of the descriptor border, row-major."""
    if edges.data.shape != mask.data.shape:
        raise ValueError(f"edge map {edges.data.shape} and mask {mask.data.shape} differ in shape")
    h, w = edges.data.shape
    ys, xs = np.nonzero(edges.data & mask.data)
    ok = _inside(xs, ys, w, h)
    return [Keypoint(int(x), int(y)) for x, y in zip(xs[ok], ys[ok])]


def dense_anchors(mask: Mask, stride: int = DEFAULT_STRIDE) -> list[Keypoint]:
    """Foreground pixels on a stride grid (stride=1 takes every pixel)."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    h, w = mask.data.shape
    grid = np.zeros_like(mask.data)
    grid[::stride, ::stride] = True
    ys, xs = np.nonzero(mask.data & grid)
    ok = _inside(xs, ys, w, h)
    return [Keypoint(int(x), int(y)) for x, y in zip(xs[ok], ys[ok])]


def _spatial_weights() -> np.ndarray:
    d = np.arange(-HALF, HALF, dtype=np.float64)
    return np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / (2 * WEIGHT_SIGMA ** 2))


_GAUSS = _spatial_weights()


def _orientation_votes(magnitude: np.ndarray, orientation: np.ndarray) -> np.ndarray:
    """Per-pixel magnitude split linearly between the two nearest orientation bins.

    Returns an array of shape (..., 8).
    """
    o = (orientation % (2 * math.pi)) * (N_BINS / (2 * math.pi))
    b0 = np.floor(o).astype(np.int64)
    frac = o - b0
    b0 %= N_BINS
    b1 = (b0 + 1) % N_BINS
    votes = np.zeros(magnitude.shape + (N_BINS,))
    np.put_along_axis(votes, b0[..., None], (magnitude * (1 - frac))[..., None], axis=-1)
    # b1 != b0 always, so a second put cannot clobber the first
    np.put_along_axis(votes, b1[..., None], (magnitude * frac)[..., None], axis=-1)
    return votes


def _normalize(hist: np.ndarray) -> np.ndarray | None:
    norm = np.linalg.norm(hist)
    if norm == 0.0:
        return None
    v = np.minimum(hist / norm, CLAMP)
    return v / np.linalg.norm(v)


def describe(gradients: GradientField, kp: Keypoint) -> np.ndarray | None:
    """128-D descriptor at ``kp``; None when the window has no gradient."""
    h, w = gradients.magnitude.shape
    x, y = kp
    if not _inside(x, y, w, h):
        raise ValueError(f"keypoint {tuple(kp)} is within {HALF} px of the border of a {w}x{h} image")
    win = (slice(y - HALF, y + HALF), slice(x - HALF, x + HALF))
    votes = _orientation_votes(gradients.magnitude[win], gradients.orientation[win])
    votes *= _GAUSS[..., None]
    hist = votes.reshape(N_CELLS, CELL, N_CELLS, CELL, N_BINS).sum(axis=(1, 3))
    return _normalize(hist.reshape(DIM))


def describe_many(gradients: GradientField, keypoints) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`describe`.

    Returns ``(descriptors, kept)`` where ``kept`` indexes the keypoints that
    produced a descriptor (zero-gradient windows are dropped).
    """
    kps = np.asarray(keypoints, dtype=np.int64).reshape(-1, 2)
    if len(kps) == 0:
        return np.zeros((0, DIM)), np.zeros(0, dtype=np.int64)
    h, w = gradients.magnitude.shape
    if not np.all(_inside(kps[:, 0], kps[:, 1], w, h)):
        raise ValueError("keypoint within the descriptor border")
    votes = _orientation_votes(gradients.magnitude, gradients.orientation)
    # windows[y, x] covers rows y..y+15, cols x..x+15
    windows = sliding_window_view(votes, (WINDOW, WINDOW), axis=(0, 1))
    sel = windows[kps[:, 1] - HALF, kps[:, 0] - HALF]  # (n, 8, 16, 16)
    sel = sel * _GAUSS
    hist = sel.reshape(-1, N_BINS, N_CELLS, CELL, N_CELLS, CELL).sum(axis=(3, 5))
    hist = hist.transpose(0, 2, 3, 1).reshape(-1, DIM)
    norms = np.linalg.norm(hist, axis=1)
    kept = np.nonzero(norms > 0)[0]
    hist = hist[kept] / norms[kept, None]
    np.minimum(hist, CLAMP, out=hist)
    hist /= np.linalg.norm(hist, axis=1, keepdims=True)
    return hist, kept


@dataclass(eq=False)
class Features:
    descriptors: np.ndarray  # (n, 128)
    keypoints: list[Keypoint]
    edges: EdgeMap | None = None

    def __len__(self):
        return len(self.keypoints)


def extract_features(image: GrayImage, mask: Mask, mode: str, params: FeatureParams = FeatureParams()) -> Features:
    if image.data.shape != mask.data.shape:
        raise ValueError(f"image {image.data.shape} and mask {mask.data.shape} differ in shape")
    grad = image_gradients(image, params.sigma)
    edges = None
    if mode == "inter":
        edges = canny_from_gradients(grad, params.canny_low, params.canny_high)
        anchors = edge_anchors(edges, mask)
    elif mode == "intra":
        anchors = dense_anchors(mask, params.stride)
    else:
        raise ValueError(f"mode must be 'inter' or 'intra', got {mode!r}")
    desc, kept = describe_many(grad, anchors)
    return Features(desc, [anchors[i] for i in kept], edges)


def extract(image: GrayImage, mask: Mask, mode: str, params: FeatureParams = FeatureParams()) -> np.ndarray:
    """Descriptors for one image as an (n, 128) array in row-major anchor order."""
    return extract_features(image, mask, mode, params).descriptors


def format_descriptors(features: Features) -> str:
    """One line per descriptor: ``x y v0 ... v127`` (round-trip decimals)."""
    lines = []
    for kp, d in zip(features.keypoints, features.descriptors):
        lines.append(f"{kp.x} {kp.y} " + " ".join(repr(float(v)) for v in d))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_descriptors(text: str) -> Features:
    kps, rows = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split()
        kps.append(Keypoint(int(parts[0]), int(parts[1])))
        rows.append([float(v) for v in parts[2:]])
    return Features(np.array(rows, dtype=np.float64).reshape(-1, DIM), kps)
