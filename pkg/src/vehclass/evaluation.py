"""Datasets, train/eval splits, and confusion-matrix reporting."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import ClassificationError
from .imgio import MASK_SUFFIX, load_image_and_mask, mask_path_for

IMAGE_SUFFIXES = (".pgm", ".ppm", ".pnm")
PROTOCOLS = ("whole", "holdout")
FAILED = "FAILED"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Item:
    image: Path
    mask: Path | None = None

    def load(self):
        return load_image_and_mask(self.image, self.mask)


@dataclass
class Dataset:
    classes: tuple[str, ...]
    items: dict[str, list[Item]]

    def __post_init__(self):
        self.classes = tuple(self.classes)
        if len(set(self.classes)) != len(self.classes):
            raise DatasetError("class labels must be unique")

    def __len__(self):
        return sum(len(v) for v in self.items.values())

    def counts(self) -> list[int]:
        return [len(self.items[c]) for c in self.classes]

    def loaded(self) -> dict:
        """``{label: [(image, mask), ...]}`` for training."""
        return {c: [it.load() for it in self.items[c]] for c in self.classes}


def _is_image(p: Path) -> bool:
    return p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES and not p.name.endswith(MASK_SUFFIX)


def load_dataset(root) -> Dataset:
    """One subdirectory per class; masks paired by the ``X.mask.pgm`` convention."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not classes:
        raise DatasetError(f"dataset root {root} has no class subdirectories")
    items = {}
    for c in classes:
        files = sorted((p for p in (root / c).iterdir() if _is_image(p)), key=lambda p: p.name)
        if not files:
            raise DatasetError(f"class {c!r} has no images in {root / c}")
        items[c] = []
        for f in files:
            m = mask_path_for(f)
            items[c].append(Item(f, m if m.exists() else None))
    return Dataset(tuple(classes), items)


def split(ds: Dataset, n_train: int, seed: int, protocol: str = "whole") -> tuple[Dataset, Dataset, str]:
    """Sample ``n_train`` images per class for training.

    ``whole`` evaluates on every image (training ones included); ``holdout``
    evaluates only on the rest.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {PROTOCOLS}, got {protocol!r}")
    if n_train < 1:
        raise DatasetError(f"n_train must be >= 1, got {n_train}")
    smallest = min(ds.counts())
    if n_train > smallest:
        raise DatasetError(f"n_train={n_train} exceeds the smallest class size ({smallest})")
    rng = np.random.default_rng(seed)
    train, held = {}, {}
    for c in ds.classes:
        items = ds.items[c]
        picked = set(rng.choice(len(items), size=n_train, replace=False).tolist())
        train[c] = [it for i, it in enumerate(items) if i in picked]
        held[c] = [it for i, it in enumerate(items) if i not in picked]
    if protocol == "whole":
        evaluation = Dataset(ds.classes, {c: list(ds.items[c]) for c in ds.classes})
    else:
        if sum(len(v) for v in held.values()) == 0:
            raise DatasetError("holdout protocol leaves no images to evaluate")
        evaluation = Dataset(ds.classes, held)
    return Dataset(ds.classes, train), evaluation, protocol


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns predicted; ``failed`` counts per true class."""

    classes: tuple[str, ...]
    counts: np.ndarray
    failed: np.ndarray
    protocol: str = ""

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1) + self.failed

    @property
    def rates(self) -> np.ndarray:
        """Row percentages over class columns plus a trailing failed column."""
        full = np.concatenate([self.counts, self.failed[:, None]], axis=1).astype(np.float64)
        tot = self.totals.astype(np.float64)
        out = np.zeros_like(full)
        nz = tot > 0
        out[nz] = 100.0 * full[nz] / tot[nz, None]
        return out

    def accuracy(self, label: str) -> float:
        i = self.classes.index(label)
        return float(self.rates[i, i])

    def format_table(self) -> str:
        heads = [*self.classes, FAILED]
        width = max(10, *(len(h) + 2 for h in heads))
        first = max(len("true\\pred"), *(len(c) for c in self.classes)) + 2
        out = io.StringIO()
        out.write(f"#protocol={self.protocol}\n")
        out.write("true\\pred".ljust(first) + "".join(h.rjust(width) for h in heads) + "n".rjust(8) + "\n")
        rates = self.rates
        for i, c in enumerate(self.classes):
            cells = "".join(f"{r:.2f}%".rjust(width) for r in rates[i])
            out.write(c.ljust(first) + cells + str(int(self.totals[i])).rjust(8) + "\n")
        return out.getvalue()

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"#protocol={self.protocol}\n")
        out.write("true_class,pred_class,count\n")
        for i, t in enumerate(self.classes):
            for j, p in enumerate(self.classes):
                out.write(f"{t},{p},{int(self.counts[i, j])}\n")
            out.write(f"{t},{FAILED},{int(self.failed[i])}\n")
        return out.getvalue()


def evaluate(model, eval_set: Dataset, protocol: str = "") -> ConfusionMatrix:
    """Classify every item with ``model.predict(image, mask)``.

    Items the model cannot classify (ClassificationError) go to the failed
    tally instead of any class.
    """
    classes = eval_set.classes
    extra = set(getattr(model, "classes", ())) - set(classes)
    if extra:
        raise DatasetError(f"model classes {sorted(extra)} are absent from the dataset")
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    failed = np.zeros(len(classes), dtype=np.int64)
    for c in classes:
        for item in eval_set.items[c]:
            image, mask = item.load()
            try:
                pred = model.predict(image, mask)
            except ClassificationError:
                failed[index[c]] += 1
                continue
            label = pred[0] if isinstance(pred, tuple) else pred
            counts[index[c], index[label]] += 1
    return ConfusionMatrix(classes, counts, failed, protocol)
