"""On-disk formats for rendered datasets.

PGM
    Binary Netpbm ``P5``. A header ``P5\\n<width> <height>\\n<maxval>\\n``
    followed by raster bytes, row-major, top row first. ``maxval`` < 256
    uses one byte per cell, otherwise two bytes big-endian. Several images
    may follow each other in one file (a Netpbm image stream).

Feature file (``features/<id>.pgm``)
    A stream of 8 images: intensity with maxval 65535 (value ``round(I *
    65535)``), then the seven occupancy channels in class-id order with
    maxval 1.

Label file (``labels/<id>.pgm``)
    One image, maxval 255; cell value is the class id, 255 for background.

Feature CSV (``features.csv``)
    Header ``sample_id,ch0_y0_x0,ch0_y0_x1,...`` (channel-major, then row,
    then column, matching `flatten_features`); one row per sample, floats
    written with ``repr``.

Manifest (``manifest.csv``)
    Header ``sample_id,feature_file,label_file,<parameter names>``; paths
    are relative to the dataset directory. Parameter columns are empty for
    ingested data whose scene parameters are unknown.
"""
from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .renderer import BACKGROUND, FeatureImage, LabelImage, N_CHANNELS, flatten_features
from .scene_model import N_CLASSES, PARAMETER_NAMES

INTENSITY_MAXVAL = 65535


def _encode_pgm(arr: np.ndarray, maxval: int) -> bytes:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must be in [1, 65535]")
    if arr.min(initial=0) < 0 or arr.max(initial=0) > maxval:
        raise ValueError(f"values outside [0, {maxval}]")
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    dtype = ">u1" if maxval < 256 else ">u2"
    return header + arr.astype(dtype).tobytes()


def write_pgm(path, images, maxvals) -> None:
    """Write one or more 2-D integer arrays as a PGM stream."""
    if isinstance(images, np.ndarray) and images.ndim == 2:
        images, maxvals = [images], [maxvals]
    with open(path, "wb") as fh:
        for img, mv in zip(images, maxvals):
            fh.write(_encode_pgm(img, int(mv)))


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_pgm(path) -> list[tuple[np.ndarray, int]]:
    """Read every image in a PGM stream as ``(array, maxval)`` pairs."""
    data = Path(path).read_bytes()
    out = []
    pos = 0
    while pos < len(data) and data[pos:].strip():
        vals = []
        for _ in range(4):
            m = _TOKEN.match(data, pos)
            if m is None:
                raise ValueError(f"{path}: truncated PGM header")
            vals.append(m.group(1))
            pos = m.end()
        magic, w, h, maxval = vals[0], int(vals[1]), int(vals[2]), int(vals[3])
        if magic != b"P5":
            raise ValueError(f"{path}: unsupported magic {magic!r}")
        pos += 1  # single whitespace byte after maxval
        nbytes = 1 if maxval < 256 else 2
        size = w * h * nbytes
        if pos + size > len(data):
            raise ValueError(f"{path}: truncated raster")
        arr = np.frombuffer(data, dtype=">u1" if nbytes == 1 else ">u2",
                            count=w * h, offset=pos).reshape(h, w)
        out.append((arr.astype(np.int64), maxval))
        pos += size
    return out


def write_feature_pgm(path, img: FeatureImage) -> None:
    q = np.rint(np.clip(img.intensity, 0, 1) * INTENSITY_MAXVAL).astype(np.int64)
    write_pgm(path, [q, *img.occupancy], [INTENSITY_MAXVAL] + [1] * img.occupancy.shape[0])


def read_feature_pgm(path) -> FeatureImage:
    imgs = read_pgm(path)
    if len(imgs) != N_CHANNELS:
        raise ValueError(f"{path}: expected {N_CHANNELS} images, found {len(imgs)}")
    (inten, mv), occ = imgs[0], imgs[1:]
    return FeatureImage(inten.astype(np.float64) / mv,
                        np.stack([(a > 0).astype(np.uint8) for a, _ in occ]))


def write_label_pgm(path, lab: LabelImage) -> None:
    write_pgm(path, np.asarray(lab.labels, dtype=np.int64), 255)


def read_label_pgm(path) -> LabelImage:
    arr, _ = read_pgm(path)[0]
    lab = arr.astype(np.uint8)
    bad = (lab != BACKGROUND) & (lab >= N_CLASSES)
    if bad.any():
        raise ValueError(f"{path}: invalid class ids present")
    return LabelImage(lab)


def feature_columns(height: int, width: int, channels: int = N_CHANNELS) -> list[str]:
    return [f"ch{c}_y{i}_x{j}" for c in range(channels) for i in range(height)
            for j in range(width)]


def write_feature_csv(path, images, ids=None) -> None:
    images = list(images)
    if ids is None:
        ids = [f"{k:06d}" for k in range(len(images))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if images:
            w.writerow(["sample_id"] + feature_columns(images[0].height, images[0].width))
        else:
            w.writerow(["sample_id"])
        for sid, img in zip(ids, images):
            w.writerow([sid] + [repr(float(v)) for v in flatten_features(img)])


def read_feature_csv(path) -> tuple[list[str], list[FeatureImage]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "sample_id":
        raise ValueError(f"{path}: missing sample_id header")
    header = rows[0]
    if len(header) == 1:
        return [], []
    m = re.fullmatch(r"ch(\d+)_y(\d+)_x(\d+)", header[-1])
    if m is None:
        raise ValueError(f"{path}: unrecognized feature column {header[-1]!r}")
    C, H, W = (int(g) + 1 for g in m.groups())
    if header[1:] != feature_columns(H, W, C):
        raise ValueError(f"{path}: feature columns are not in channel-major order")
    ids, imgs = [], []
    for row in rows[1:]:
        ids.append(row[0])
        arr = np.array([float(v) for v in row[1:]]).reshape(C, H, W)
        imgs.append(FeatureImage.from_array(arr))
    return ids, imgs


@dataclass
class Dataset:
    """Feature images with optional labels and scene-parameter vectors."""

    features: list[FeatureImage]
    labels: list[LabelImage] | None = None
    params: np.ndarray | None = None
    ids: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.features)


MANIFEST_COLUMNS = ["sample_id", "feature_file", "label_file", *PARAMETER_NAMES]


def write_dataset(root, features, labels=None, params=None) -> Path:
    """Write features/labels as PGM files plus ``manifest.csv``."""
    root = Path(root)
    (root / "features").mkdir(parents=True, exist_ok=True)
    (root / "labels").mkdir(parents=True, exist_ok=True)
    rows = []
    for k, img in enumerate(features):
        sid = f"{k:06d}"
        ff = f"features/{sid}.pgm"
        write_feature_pgm(root / ff, img)
        lf = ""
        if labels is not None:
            lf = f"labels/{sid}.pgm"
            write_label_pgm(root / lf, labels[k])
        pv = [""] * len(PARAMETER_NAMES)
        if params is not None:
            pv = [repr(float(v)) for v in params[k]]
        rows.append([sid, ff, lf, *pv])
    with open(root / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MANIFEST_COLUMNS)
        w.writerows(rows)
    return root / "manifest.csv"


def load_dataset(root) -> Dataset:
    """Load a dataset directory.

    Uses ``manifest.csv`` (PGM files) when present, otherwise
    ``features.csv``.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    manifest = root / "manifest.csv"
    if manifest.exists():
        with open(manifest, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
        feats, labs, params, ids = [], [], [], []
        have_labels = bool(rows) and all(r.get("label_file") for r in rows)
        have_params = bool(rows) and all(r.get(n) for r in rows for n in PARAMETER_NAMES)
        for r in rows:
            ids.append(r["sample_id"])
            feats.append(read_feature_pgm(root / r["feature_file"]))
            if have_labels:
                labs.append(read_label_pgm(root / r["label_file"]))
            if have_params:
                params.append([float(r[n]) for n in PARAMETER_NAMES])
        return Dataset(feats, labs if have_labels else None,
                       np.array(params) if have_params else None, ids)
    fcsv = root / "features.csv"
    if fcsv.exists():
        ids, feats = read_feature_csv(fcsv)
        return Dataset(feats, None, None, ids)
    raise FileNotFoundError(f"{root}: no manifest.csv or features.csv")


def is_dataset_dir(path) -> bool:
    return os.path.isfile(os.path.join(path, "manifest.csv")) or \
        os.path.isfile(os.path.join(path, "features.csv"))
