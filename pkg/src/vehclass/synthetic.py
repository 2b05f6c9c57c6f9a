"""Deterministic synthetic vehicle silhouettes for desk-scale experiments.

``inter`` style: a boxy class (rectangular cab) against a rounded class
(trapezoidal cab). ``intra`` style: one silhouette for both classes, with a
thin bright roof bar (taxi-sign analog) on the ``marked`` class.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .evaluation import Dataset, load_dataset
from .imgio import MASK_SUFFIX, to_p5_bytes

WIDTH, HEIGHT = 128, 96
STYLES = {"inter": ("boxy", "rounded"), "intra": ("marked", "plain")}

BACKGROUND = 60
BODY = 150
INTENSITY_JITTER = 20
NOISE = 8
SHIFT = 4
SIZE_JITTER = 0.10


def _fill_polygon(canvas: np.ndarray, xs_left, xs_right, y0: int, y1: int, value) -> None:
    """Fill rows y0..y1-1 between per-row [left, right) bounds."""
    for row, (l, r) in zip(range(y0, y1), zip(xs_left, xs_right)):
        canvas[row, max(0, int(l)):min(canvas.shape[1], int(r))] = value


def _outline(region: np.ndarray) -> np.ndarray:
    inner = region.copy()
    inner[1:, :] &= region[:-1, :]
    inner[:-1, :] &= region[1:, :]
    inner[:, 1:] &= region[:, :-1]
    inner[:, :-1] &= region[:, 1:]
    return region & ~inner


def render(shape: str, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw one vehicle; returns (uint8 image, bool silhouette)."""
    scale = 1.0 + rng.uniform(-SIZE_JITTER, SIZE_JITTER)
    dx, dy = rng.integers(-SHIFT, SHIFT + 1, size=2)
    body_value = BODY + rng.integers(-INTENSITY_JITTER, INTENSITY_JITTER + 1)

    canvas = np.full((HEIGHT, WIDTH), float(BACKGROUND))
    silhouette = np.zeros((HEIGHT, WIDTH), dtype=bool)

    bw, bh = round(88 * scale), round(24 * scale)
    cx, bottom = WIDTH // 2 + dx, 72 + dy
    bx0, by0 = cx - bw // 2, bottom - bh
    body = np.zeros_like(silhouette)
    body[by0:bottom, bx0:bx0 + bw] = True

    ch = round(20 * scale)
    cab = np.zeros_like(silhouette)
    rows = np.arange(ch)
    if shape == "boxy":
        cw = round(72 * scale)
        left = np.full(ch, cx - cw // 2)
        right = left + cw
    else:
        base, top = round(60 * scale), round(30 * scale)
        # rows run top to bottom: narrow roof widening to the base
        half = (top + (base - top) * rows / max(ch - 1, 1)) / 2
        left, right = np.round(cx - half), np.round(cx + half)
    _fill_polygon(cab, left, right, by0 - ch, by0, True)

    silhouette = body | cab
    canvas[body] = body_value
    canvas[cab] = body_value - 45
    canvas[_outline(cab)] = body_value - 90
    if shape == "boxy":
        # window pillars: thin vertical lines that the trapezoidal cab lacks
        for frac in (1 / 3, 2 / 3):
            px = int(left[0] + frac * cw)
            canvas[by0 - ch:by0, px] = body_value - 90

    if shape == "marked":
        mw, mh = round(32 * scale), 4
        mx0 = cx - mw // 2
        my0 = by0 - ch - mh
        canvas[my0:my0 + mh, mx0:mx0 + mw] = 250
        silhouette[my0:my0 + mh, mx0:mx0 + mw] = True

    canvas += rng.integers(-NOISE, NOISE + 1, size=canvas.shape)
    return np.clip(np.round(canvas), 0, 255).astype(np.uint8), silhouette


def gen_synthetic(out_dir, n_per_class: int, seed: int, style: str = "inter") -> Dataset:
    """Write ``n_per_class`` images and masks per class under ``out_dir/<class>/``."""
    if style not in STYLES:
        raise ValueError(f"style must be one of {tuple(STYLES)}, got {style!r}")
    out = Path(out_dir)
    rng = np.random.default_rng(seed)
    for label in STYLES[style]:
        shape = {"plain": "rounded"}.get(label, label)
        d = out / label
        d.mkdir(parents=True, exist_ok=True)
        for i in range(n_per_class):
            img, sil = render(shape, rng)
            stem = f"{label}_{i:03d}"
            (d / f"{stem}.pgm").write_bytes(to_p5_bytes(img))
            (d / f"{stem}{MASK_SUFFIX}").write_bytes(to_p5_bytes(sil.astype(np.uint8) * 255))
    return load_dataset(out)
