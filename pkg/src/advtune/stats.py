"""Dataset statistics: pooled intensity histograms, histogram KL and
per-class pixel proportions."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import BinningMismatch, EmptyDataset
from .priors import KL_EPSILON, table_kl
from .renderer import BACKGROUND
from .scene_model import CLASS_NAMES, N_CLASSES

DEFAULT_HIST_BINS = 64


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    frequencies: np.ndarray
    max_normalized: bool = True

    @property
    def bins(self) -> int:
        return self.counts.size

    def merge(self, other: "Histogram") -> "Histogram":
        _check_binning(self, other)
        return histogram_from_counts(self.edges, self.counts + other.counts)


def histogram_from_counts(edges, counts) -> Histogram:
    counts = np.asarray(counts, dtype=np.int64)
    m = counts.max() if counts.size else 0
    freq = counts / m if m > 0 else np.zeros(counts.size)
    return Histogram(np.asarray(edges, dtype=np.float64), counts, freq, m > 0)


def _intensity_of(img):
    return np.asarray(getattr(img, "intensity", img), dtype=np.float64)


def intensity_histogram(images, bins: int = DEFAULT_HIST_BINS) -> Histogram:
    """Pool every intensity cell of every image into one histogram on [0, 1].

    Counts are kept; ``frequencies`` are counts divided by the largest count.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    images = list(images)
    if not images:
        raise EmptyDataset("no images to histogram")
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    for img in images:
        counts += np.histogram(_intensity_of(img), bins=edges)[0]
    return histogram_from_counts(edges, counts)


def _check_binning(p: Histogram, q: Histogram) -> None:
    if p.edges.shape != q.edges.shape or not np.allclose(p.edges, q.edges, rtol=0, atol=1e-12):
        raise BinningMismatch(f"histograms have different binning ({p.bins} vs {q.bins} bins)")


def histogram_kl(p: Histogram, q: Histogram, eps: float = KL_EPSILON) -> float:
    """KL(p || q) on sum-normalized counts, q smoothed by ``eps`` per bin."""
    _check_binning(p, q)
    return table_kl(p.counts.astype(np.float64), q.counts.astype(np.float64), eps)


@dataclass(frozen=True)
class ClassProportions:
    fractions: np.ndarray
    all_background: bool
    counts: np.ndarray


def class_pixel_proportions(labels) -> ClassProportions:
    """Share of non-background cells per class over a label set."""
    labels = list(labels)
    if not labels:
        raise EmptyDataset("no label images")
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    for lab in labels:
        arr = np.asarray(getattr(lab, "labels", lab)).ravel()
        arr = arr[arr != BACKGROUND]
        counts += np.bincount(arr.astype(np.int64), minlength=N_CLASSES)[:N_CLASSES]
    total = counts.sum()
    if total == 0:
        return ClassProportions(np.zeros(N_CLASSES), True, counts)
    return ClassProportions(counts / total, False, counts)


def write_histogram_csv(path, hist: Histogram, extra: dict[str, Histogram] | None = None) -> None:
    """Columns ``bin_left,bin_right,frequency`` (+ one frequency column per extra)."""
    extra = extra or {}
    for h in extra.values():
        _check_binning(hist, h)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_left", "bin_right", "frequency", *(f"frequency_{k}" for k in extra)])
        for i in range(hist.bins):
            w.writerow([repr(float(hist.edges[i])), repr(float(hist.edges[i + 1])),
                        repr(float(hist.frequencies[i])),
                        *(repr(float(h.frequencies[i])) for h in extra.values())])


def write_proportions_csv(path, props: dict[str, ClassProportions]) -> None:
    """Columns ``class_id,class_name`` then one fraction column per dataset."""
    names = list(props)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class_id", "class_name", *names])
        for c in range(N_CLASSES):
            w.writerow([c, CLASS_NAMES[c], *(repr(float(props[n].fractions[c])) for n in names)])
