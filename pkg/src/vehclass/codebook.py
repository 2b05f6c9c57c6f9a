"""K-means codebook and Euclidean nearest-centroid assignment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

DEFAULT_K = 400
DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-4

# rows per cdist block; bounds peak memory on large training sets
_CHUNK = 8192


@dataclass(eq=False)
class Codebook:
    centroids: np.ndarray  # (k, dim)
    seed: int
    inertia: float

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2:
            raise ValueError("centroids must be a 2-D array")
        if not np.all(np.isfinite(self.centroids)):
            raise ValueError("centroids contain NaN or infinite values")

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.inertia == other.inertia
            and self.centroids.shape == other.centroids.shape
            and np.array_equal(self.centroids, other.centroids)
        )


class Assignment(NamedTuple):
    cluster: int
    distance: float


def nearest(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index (lowest on ties) and Euclidean distance of each point's nearest centroid."""
    n = len(points)
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        d = cdist(points[start:start + _CHUNK], centroids)
        idx = np.argmin(d, axis=1)
        labels[start:start + _CHUNK] = idx
        dists[start:start + _CHUNK] = d[np.arange(len(idx)), idx]
    return labels, dists


def assign(d, cb: Codebook) -> Assignment:
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (cb.dim,):
        raise ValueError(f"descriptor has shape {d.shape}, codebook expects ({cb.dim},)")
    labels, dists = nearest(d[None, :], cb.centroids)
    return Assignment(int(labels[0]), float(dists[0]))


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    chosen = [int(rng.integers(n))]
    closest = cdist(x, x[chosen[0]][None, :], "sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        # k <= distinct points guarantees total > 0 here
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(closest), r, side="right"))
        idx = min(idx, n - 1)
        while closest[idx] == 0.0:  # guard against landing on a zero-mass point
            idx = (idx + 1) % n
        chosen.append(idx)
        closest = np.minimum(closest, cdist(x, x[idx][None, :], "sqeuclidean")[:, 0])
    return x[chosen].copy()


def _update(x: np.ndarray, labels: np.ndarray, dists: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    k, dim = centroids.shape
    sums = np.zeros((k, dim))
    np.add.at(sums, labels, x)
    counts = np.bincount(labels, minlength=k)
    new = centroids.copy()
    filled = counts > 0
    new[filled] = sums[filled] / counts[filled, None]
    empty = np.nonzero(~filled)[0]
    if len(empty):
        # re-seed each empty cluster at the point farthest from its own centroid
        far = dists.copy()
        for j in empty:
            idx = int(np.argmax(far))
            new[j] = x[idx]
            far[idx] = -1.0
    return new


def kmeans(
    descriptors,
    k: int = DEFAULT_K,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    history: list | None = None,
) -> Codebook:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when the largest centroid shift drops below ``tol`` or after
    ``max_iters`` updates. If ``history`` is given, the inertia after every
    assignment step is appended to it.
    """
    x = np.asarray(descriptors, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("kmeans needs a non-empty (n, dim) array of descriptors")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if max_iters < 1 or tol < 0:
        raise ValueError("max_iters must be >= 1 and tol >= 0")
    distinct = len(np.unique(x, axis=0))
    if k > distinct:
        raise ValueError(f"k={k} exceeds the number of distinct descriptors ({distinct})")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(x, k, rng)
    for _ in range(max_iters):
        labels, dists = nearest(x, centroids)
        if history is not None:
            history.append(float(np.sum(dists ** 2)))
        new = _update(x, labels, dists, centroids)
        shift = float(np.max(np.linalg.norm(new - centroids, axis=1)))
        centroids = new
        if shift < tol:
            break
    _, dists = nearest(x, centroids)
    inertia = float(np.sum(dists ** 2))
    if history is not None:
        history.append(inertia)
    return Codebook(centroids, seed=seed, inertia=inertia)
