"""Grayscale image and mask I/O over the Netpbm family (PGM/PPM)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MASK_SUFFIX = ".mask.pgm"


class PnmError(ValueError):
    """Malformed or unsupported Netpbm file."""

    def __init__(self, path, offset: int, message: str):
        self.path = str(path)
        self.offset = offset
        super().__init__(f"{self.path} (byte {offset}): {message}")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single-channel raster; ``data`` has shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"image data must be a non-empty 2-D array, got shape {data.shape}")
        if data.dtype != np.uint8:
            if np.any(data < 0) or np.any(data > 255):
                raise ValueError("intensities must lie in [0, 255]")
            data = data.astype(np.uint8)
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class Mask:
    """Foreground mask; True marks vehicle pixels."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=bool)
        if data.ndim != 2:
            raise ValueError("mask data must be 2-D")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return np.array_equal(self.data, other.data)


def rgb_to_gray(r, g, b):
    """BT.601 luma, rounded half-up. Works on scalars or integer arrays."""
    # integer arithmetic keeps round-half-up exact
    r, g, b = (np.asarray(c, dtype=np.int64) for c in (r, g, b))
    y = (299 * r + 587 * g + 114 * b + 500) // 1000
    y = np.clip(y, 0, 255)
    return int(y) if y.ndim == 0 else y.astype(np.uint8)


class _Reader:
    """Byte cursor over a PNM header with comment skipping."""

    def __init__(self, path, raw: bytes):
        self.path = path
        self.raw = raw
        self.pos = 0

    def fail(self, message, offset=None):
        raise PnmError(self.path, self.pos if offset is None else offset, message)

    def skip_space(self):
        raw = self.raw
        while self.pos < len(raw):
            c = raw[self.pos]
            if c == ord("#"):
                while self.pos < len(raw) and raw[self.pos] not in b"\r\n":
                    self.pos += 1
            elif chr(c).isspace():
                self.pos += 1
            else:
                break

    def token(self) -> bytes:
        self.skip_space()
        start = self.pos
        while self.pos < len(self.raw) and not chr(self.raw[self.pos]).isspace() \
                and self.raw[self.pos] != ord("#"):
            self.pos += 1
        if start == self.pos:
            self.fail("unexpected end of header")
        return self.raw[start:self.pos]

    def integer(self, what: str) -> int:
        start = self.pos
        tok = self.token()
        if not tok.isdigit():
            self.fail(f"expected {what}, got {tok[:16]!r}", start)
        return int(tok)


def _parse_pnm(path, raw: bytes) -> tuple[np.ndarray, int]:
    """Return (pixels, channels); pixels is (h, w) or (h, w, 3) uint8."""
    rd = _Reader(path, raw)
    if len(raw) < 2 or raw[0:1] != b"P":
        rd.fail("not a Netpbm file")
    magic = raw[0:2].decode("ascii", "replace")
    if magic not in ("P2", "P3", "P5", "P6"):
        rd.fail(f"unsupported magic number {magic!r}")
    rd.pos = 2
    width = rd.integer("width")
    height = rd.integer("height")
    maxval_at = rd.pos
    maxval = rd.integer("maxval")
    if width < 1 or height < 1:
        rd.fail(f"invalid dimensions {width}x{height}")
    if maxval < 1 or maxval > 255:
        rd.fail(f"maxval {maxval} outside 1..255", maxval_at)
    channels = 3 if magic in ("P3", "P6") else 1
    count = width * height * channels

    if magic in ("P5", "P6"):
        # exactly one whitespace byte separates the header from the raster
        if rd.pos >= len(raw) or not chr(raw[rd.pos]).isspace():
            rd.fail("missing whitespace after maxval")
        start = rd.pos + 1
        payload = raw[start:start + count]
        if len(payload) < count:
            rd.fail(f"truncated raster: expected {count} bytes, found {len(payload)}", start)
        values = np.frombuffer(payload, dtype=np.uint8)
    else:
        values = np.empty(count, dtype=np.int64)
        for i in range(count):
            at = rd.pos
            try:
                values[i] = rd.integer("sample")
            except PnmError:
                rd.fail(f"truncated raster: expected {count} samples, found {i}", at)
    if values.max(initial=0) > maxval:
        rd.fail(f"sample exceeds maxval {maxval}")
    if maxval != 255:
        # rescale to the full 8-bit range
        values = (values.astype(np.int64) * 255 * 2 + maxval) // (2 * maxval)
    values = values.astype(np.uint8)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return values.reshape(shape), channels


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise PnmError(path, 0, f"cannot read file: {exc.strerror or exc}") from exc


def load_pnm(path) -> GrayImage:
    """Load a PGM (P2/P5) or PPM (P3/P6); colour is converted with :func:`rgb_to_gray`."""
    pixels, channels = _parse_pnm(path, _read_bytes(path))
    if channels == 3:
        pixels = rgb_to_gray(pixels[..., 0], pixels[..., 1], pixels[..., 2])
    return GrayImage(pixels)


def load_mask(path, image: GrayImage) -> Mask:
    pixels, channels = _parse_pnm(path, _read_bytes(path))
    if channels != 1:
        raise PnmError(path, 0, "mask must be a PGM")
    if pixels.shape != image.data.shape:
        raise PnmError(
            path, 0,
            f"mask is {pixels.shape[1]}x{pixels.shape[0]} but image is {image.width}x{image.height}",
        )
    return Mask(pixels > 0)


def full_mask(image: GrayImage) -> Mask:
    return Mask(np.ones(image.data.shape, dtype=bool))


def mask_path_for(image_path) -> Path:
    """``X.pgm`` -> ``X.mask.pgm``."""
    p = Path(image_path)
    return p.with_name(p.stem + MASK_SUFFIX)


def load_image_and_mask(path, mask_path=None) -> tuple[GrayImage, Mask]:
    """Load an image plus its paired mask, defaulting to a full mask."""
    image = load_pnm(path)
    if mask_path is None:
        candidate = mask_path_for(path)
        mask_path = candidate if candidate.exists() else None
    mask = load_mask(mask_path, image) if mask_path is not None else full_mask(image)
    return image, mask


def to_p5_bytes(data: np.ndarray) -> bytes:
    data = np.ascontiguousarray(data, dtype=np.uint8)
    h, w = data.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + data.tobytes()


def save_pgm(path, image) -> None:
    """Write a P5 PGM. Accepts a GrayImage, Mask (255/0), or 2-D array."""
    if isinstance(image, GrayImage):
        data = image.data
    elif isinstance(image, Mask):
        data = image.data.astype(np.uint8) * 255
    else:
        arr = np.asarray(image)
        data = arr.astype(np.uint8) * 255 if arr.dtype == bool else arr
    Path(path).write_bytes(to_p5_bytes(data))
