"""Matching media and classifiers.

Inter-class: each codebook cluster carries per-class weights m/n (share of a
class's training images the cluster matches); a query is scored by summing
the weights of the clusters it matches.

Intra-class: each image is reduced to a K-bit signature of which clusters it
matches; a query takes the label of the nearest training signature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .codebook import Codebook, nearest


class ClassificationError(Exception):
    """A query could not be assigned a class."""

    reason = "failed"


class NoFeaturesError(ClassificationError):
    reason = "no-features"


class NoMatchError(ClassificationError):
    """The query matched no cluster, so every class scores zero."""

    reason = "no-match"


@dataclass(eq=False)
class WeightTable:
    classes: tuple[str, ...]
    weights: np.ndarray  # (k, C)

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.weights.shape[0], len(self.classes)):
            raise ValueError("weights must have one column per class")
        if np.any(self.weights < 0) or np.any(self.weights > 1):
            raise ValueError("weights must lie in [0, 1]")

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other):
        if not isinstance(other, WeightTable):
            return NotImplemented
        return self.classes == other.classes and np.array_equal(self.weights, other.weights)


@dataclass(eq=False)
class Signature:
    bits: np.ndarray
    label: str | None = None

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)

    def __len__(self):
        return len(self.bits)

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_string(cls, s: str, label: str | None = None) -> "Signature":
        if set(s) - {"0", "1"}:
            raise ValueError(f"signature must be 0/1 characters, got {s[:20]!r}")
        return cls(np.array([c == "1" for c in s], dtype=bool), label)

    def __eq__(self, other):
        if not isinstance(other, Signature):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.bits, other.bits)


@dataclass
class ClassScore:
    scores: np.ndarray
    predicted: str
    matched_clusters: int
    classes: tuple[str, ...] = field(default=())


def _as_descriptors(descriptors, dim: int) -> np.ndarray:
    d = np.asarray(descriptors, dtype=np.float64)
    if d.size == 0:
        return d.reshape(0, dim)
    if d.ndim != 2 or d.shape[1] != dim:
        raise ValueError(f"descriptors have shape {d.shape}, expected (n, {dim})")
    return d


def min_distances(centroids: np.ndarray, descriptors) -> np.ndarray:
    """For each centroid, the distance to its closest descriptor (inf if none)."""
    centroids = np.asarray(centroids, dtype=np.float64)
    d = _as_descriptors(descriptors, centroids.shape[1])
    if len(d) == 0:
        return np.full(len(centroids), np.inf)
    return cdist(centroids, d).min(axis=1)


def cluster_matches_image(centroid, image_descriptors, tau: float) -> bool:
    centroid = np.asarray(centroid, dtype=np.float64)
    return bool(min_distances(centroid[None, :], image_descriptors)[0] <= tau)


def build_signature(image_descriptors, cb: Codebook, tau: float, label: str | None = None) -> Signature:
    return Signature(min_distances(cb.centroids, image_descriptors) <= tau, label)


def auto_tau(training_descriptors, cb: Codebook) -> float:
    """Median nearest-centroid distance over the training descriptors."""
    d = _as_descriptors(training_descriptors, cb.dim)
    if len(d) == 0:
        raise ValueError("no training descriptors to calibrate tau")
    _, dists = nearest(d, cb.centroids)
    return float(np.median(dists))


def assign_weights(cb: Codebook, training: dict[str, Sequence], tau: float) -> WeightTable:
    """``training`` maps class label -> list of per-image descriptor arrays."""
    classes = tuple(training)
    weights = np.zeros((cb.k, len(classes)))
    for c, label in enumerate(classes):
        images = training[label]
        if len(images) == 0:
            raise ValueError(f"class {label!r} has no training images")
        matched = np.zeros(cb.k)
        for descs in images:
            matched += min_distances(cb.centroids, descs) <= tau
        weights[:, c] = matched / len(images)
    return WeightTable(classes, weights)


def classify_inter(query, cb: Codebook, wt: WeightTable, tau: float) -> ClassScore:
    if wt.k != cb.k:
        raise ValueError(f"weight table has {wt.k} clusters but codebook has {cb.k}")
    q = _as_descriptors(query, cb.dim)
    if len(q) == 0:
        raise NoFeaturesError("query has no descriptors")
    matched = min_distances(cb.centroids, q) <= tau
    n_matched = int(matched.sum())
    if n_matched == 0:
        raise NoMatchError("query matched no cluster")
    scores = wt.weights[matched].sum(axis=0)
    return ClassScore(scores, wt.classes[int(np.argmax(scores))], n_matched, wt.classes)


def signature_distances(query: Signature, training: Sequence[Signature]) -> np.ndarray:
    if not training:
        raise ValueError("training signature set is empty")
    mat = np.array([t.bits for t in training], dtype=bool)
    if mat.shape[1] != len(query.bits):
        raise ValueError(f"signature length {len(query.bits)} does not match training length {mat.shape[1]}")
    return np.sqrt(np.count_nonzero(mat != query.bits, axis=1).astype(np.float64))


def classify_intra(query: Signature, training: Sequence[Signature]) -> tuple[str, float]:
    """Label and Euclidean distance of the nearest training signature (earliest on ties)."""
    dist = signature_distances(query, training)
    i = int(np.argmin(dist))
    return training[i].label, float(dist[i])
