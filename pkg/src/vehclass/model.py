"""Trained model: training pipeline, prediction, and the ESVC file format.

File layout (UTF-8, ``\\n`` line endings)::

    ESVC 1
    mode <inter|intra>
    k <int>
    dim <int>
    tau <decimal>
    classes <comma-separated labels>
    params <key=value ...>
    checksum <crc32 of payload, 8 hex digits>
    <blank line>
    <payload>

The payload holds k centroid lines, then either a ``weights`` section (k lines
of C decimals) or a ``signatures`` section (``<label> <k 0/1 chars>`` per
training image). Floats are written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .classify import (
    NoFeaturesError,
    Signature,
    WeightTable,
    assign_weights,
    auto_tau,
    build_signature,
    classify_inter,
    classify_intra,
)
from .codebook import DEFAULT_K, DEFAULT_MAX_ITERS, DEFAULT_TOL, Codebook, kmeans
from .feature import FeatureParams, extract_features
from .imgio import GrayImage, Mask

FORMAT_VERSION = 1
MAGIC = "ESVC"
MODES = ("inter", "intra")


class ModelFormatError(ValueError):
    pass


class ChecksumError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


@dataclass(frozen=True)
class ModelParams:
    sigma: float = FeatureParams.sigma
    canny_low: float | None = None
    canny_high: float | None = None
    stride: int = FeatureParams.stride
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL

    @property
    def features(self) -> FeatureParams:
        return FeatureParams(self.sigma, self.canny_low, self.canny_high, self.stride)


class Prediction(NamedTuple):
    label: str
    value: float  # inter: winning score; intra: signature distance
    count: int  # inter: matched clusters; intra: Hamming distance


@dataclass(eq=False)
class TrainedModel:
    mode: str
    codebook: Codebook
    tau: float
    classes: tuple[str, ...]
    params: ModelParams = field(default_factory=ModelParams)
    weight_table: WeightTable | None = None
    signatures: list[Signature] | None = None
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        self.classes = tuple(self.classes)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if (self.mode == "inter") != (self.weight_table is not None) or \
                (self.mode == "intra") != (self.signatures is not None):
            raise ValueError(f"{self.mode} model needs exactly the matching medium for its mode")

    def features(self, image: GrayImage, mask: Mask):
        return extract_features(image, mask, self.mode, self.params.features)

    def predict_descriptors(self, descriptors) -> Prediction:
        """Classify one image's descriptors; raises ClassificationError subclasses."""
        if self.mode == "inter":
            score = classify_inter(descriptors, self.codebook, self.weight_table, self.tau)
            return Prediction(score.predicted, float(score.scores.max()), score.matched_clusters)
        if len(descriptors) == 0:
            raise NoFeaturesError("query has no descriptors")
        sig = build_signature(descriptors, self.codebook, self.tau)
        label, dist = classify_intra(sig, self.signatures)
        return Prediction(label, dist, int(round(dist * dist)))

    def predict(self, image: GrayImage, mask: Mask) -> Prediction:
        return self.predict_descriptors(self.features(image, mask).descriptors)

    def __eq__(self, other):
        if not isinstance(other, TrainedModel):
            return NotImplemented
        return all(getattr(self, f.name) == getattr(other, f.name) for f in fields(self))


@dataclass
class TrainingSummary:
    descriptors_per_class: dict[str, int]
    images_per_class: dict[str, int]
    inertia: float
    tau: float
    iterations: int


def train(
    training: dict[str, list[tuple[GrayImage, Mask]]],
    mode: str,
    k: int = DEFAULT_K,
    seed: int = 0,
    params: ModelParams = ModelParams(),
    tau: float | None = None,
    on_features=None,
) -> tuple[TrainedModel, TrainingSummary]:
    """Offline training over ``{label: [(image, mask), ...]}``.

    ``on_features(label, index, features)`` is called for every training
    image, e.g. for debug dumps.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    per_image: dict[str, list[np.ndarray]] = {}
    for label, items in training.items():
        if not items:
            raise ValueError(f"class {label!r} has no training images")
        per_image[label] = []
        for i, (image, mask) in enumerate(items):
            feats = extract_features(image, mask, mode, params.features)
            if on_features is not None:
                on_features(label, i, feats)
            per_image[label].append(feats.descriptors)
    all_desc = np.concatenate([d for imgs in per_image.values() for d in imgs], axis=0)
    if len(all_desc) == 0:
        raise ValueError("training images produced no descriptors")

    history: list[float] = []
    cb = kmeans(all_desc, k, seed=seed, max_iters=params.max_iters, tol=params.tol, history=history)
    if tau is None:
        tau = auto_tau(all_desc, cb)
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")

    classes = tuple(training)
    if mode == "inter":
        model = TrainedModel(mode, cb, tau, classes, params, weight_table=assign_weights(cb, per_image, tau))
    else:
        sigs = [build_signature(d, cb, tau, label) for label, imgs in per_image.items() for d in imgs]
        model = TrainedModel(mode, cb, tau, classes, params, signatures=sigs)
    summary = TrainingSummary(
        {c: int(sum(len(d) for d in imgs)) for c, imgs in per_image.items()},
        {c: len(imgs) for c, imgs in per_image.items()},
        cb.inertia,
        tau,
        len(history) - 1,
    )
    return model, summary


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _params_line(model: TrainedModel) -> str:
    p = model.params
    items = [(f.name, getattr(p, f.name)) for f in fields(p)]
    items += [("seed", model.codebook.seed), ("inertia", float(model.codebook.inertia))]
    return " ".join(f"{k}={_fmt(v)}" for k, v in items)


def _check_label(label: str):
    if not label or any(c in label for c in ", \t\r\n"):
        raise ValueError(f"class label {label!r} must be non-empty without commas or whitespace")


def dumps(model: TrainedModel) -> str:
    for c in model.classes:
        _check_label(c)
    lines = [" ".join(repr(float(v)) for v in row) for row in model.codebook.centroids]
    if model.mode == "inter":
        lines.append("weights")
        lines += [" ".join(repr(float(v)) for v in row) for row in model.weight_table.weights]
    else:
        lines.append("signatures")
        lines += [f"{s.label} {s.to_string()}" for s in model.signatures]
    payload = "\n".join(lines) + "\n"
    header = [
        f"{MAGIC} {model.format_version}",
        f"mode {model.mode}",
        f"k {model.codebook.k}",
        f"dim {model.codebook.dim}",
        f"tau {float(model.tau)!r}",
        f"classes {','.join(model.classes)}",
        f"params {_params_line(model)}",
        f"checksum {zlib.crc32(payload.encode('utf-8')):08x}",
        "",
    ]
    return "\n".join(header) + "\n" + payload


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_bytes(dumps(model).encode("utf-8"))


def _parse_value(name: str, raw: str, kind):
    if raw == "auto":
        return None
    return kind(raw)


def loads(text: str) -> TrainedModel:
    head, sep, payload = text.partition("\n\n")
    if not sep:
        raise ModelFormatError("truncated model file: missing header terminator")
    header = {}
    lines = head.split("\n")
    first = lines[0].split()
    if len(first) != 2 or first[0] != MAGIC:
        raise ModelFormatError("not an ESVC model file")
    try:
        version = int(first[1])
    except ValueError:
        raise ModelFormatError(f"bad format version {first[1]!r}") from None
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported model format version {version} (this build reads {FORMAT_VERSION})")
    for line in lines[1:]:
        key, _, value = line.partition(" ")
        header[key] = value
    required = ("mode", "k", "dim", "tau", "classes", "params", "checksum")
    missing = [r for r in required if r not in header]
    if missing:
        raise ModelFormatError(f"model header lacks {', '.join(missing)}")

    expected = header["checksum"].strip().lower()
    actual = f"{zlib.crc32(payload.encode('utf-8')):08x}"
    if expected != actual:
        raise ChecksumError(f"payload checksum {actual} does not match header {expected}")

    try:
        mode = header["mode"]
        k, dim = int(header["k"]), int(header["dim"])
        tau = float(header["tau"])
        classes = tuple(header["classes"].split(","))
        kv = dict(item.split("=", 1) for item in header["params"].split())
        kinds = {f.name: (int if f.type == "int" else float) for f in fields(ModelParams)}
        params = ModelParams(**{n: _parse_value(n, kv[n], kinds[n]) for n in kinds})
        seed, inertia = int(kv["seed"]), float(kv["inertia"])
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"malformed model header: {exc}") from exc

    body = payload.split("\n")
    if body and body[-1] == "":
        body.pop()
    section = "weights" if mode == "inter" else "signatures"
    if len(body) < k + 1 or body[k] != section:
        raise ModelFormatError(f"truncated model payload: expected {k} centroids then '{section}'")
    try:
        centroids = np.array([[float(v) for v in line.split()] for line in body[:k]], dtype=np.float64)
        if centroids.shape != (k, dim):
            raise ModelFormatError(f"centroid block has shape {centroids.shape}, header says ({k}, {dim})")
        cb = Codebook(centroids, seed=seed, inertia=inertia)
        rest = body[k + 1:]
        if mode == "inter":
            if len(rest) != k:
                raise ModelFormatError(f"weights section has {len(rest)} rows, expected {k}")
            w = np.array([[float(v) for v in line.split()] for line in rest], dtype=np.float64)
            if w.shape != (k, len(classes)):
                raise ModelFormatError(f"weights have shape {w.shape}, expected ({k}, {len(classes)})")
            return TrainedModel(mode, cb, tau, classes, params, weight_table=WeightTable(classes, w),
                                format_version=version)
        sigs = []
        for line in rest:
            label, _, bits = line.partition(" ")
            if len(bits) != k or label not in classes:
                raise ModelFormatError(f"bad signature line {line[:40]!r}")
            sigs.append(Signature.from_string(bits, label))
        return TrainedModel(mode, cb, tau, classes, params, signatures=sigs, format_version=version)
    except ModelFormatError:
        raise
    except ValueError as exc:
        raise ModelFormatError(f"malformed model payload: {exc}") from exc


def load_model(path) -> TrainedModel:
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"{path}: not UTF-8") from exc
    return loads(text)
