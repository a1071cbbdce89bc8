import math

import numpy as np
import pytest

from advtune.errors import BinningMismatch, EmptyDataset
from advtune.renderer import BACKGROUND, FeatureImage, LabelImage
from advtune.stats import (class_pixel_proportions, histogram_from_counts, histogram_kl,
                           intensity_histogram, write_histogram_csv, write_proportions_csv)


def fimg(I):
    I = np.asarray(I, dtype=float)
    return FeatureImage(I, np.zeros((7,) + I.shape, np.uint8))


def test_all_zero_images():
    h = intensity_histogram([fimg(np.zeros((4, 4)))] * 3, bins=10)
    assert h.frequencies[0] == 1.0 and not h.frequencies[1:].any()
    assert h.counts[0] == 48


def test_uniform_cells_flat(rng):
    imgs = [fimg(rng.random((100, 100))) for _ in range(100)]
    h = intensity_histogram(imgs, bins=64)
    assert np.all(np.abs(h.frequencies - 1) < 0.05)


def test_pooling_identities(rng):
    imgs = [fimg(rng.random((8, 8))) for _ in range(5)]
    single = intensity_histogram(imgs[:1], 16)
    np.testing.assert_array_equal(single.counts,
                                  np.histogram(imgs[0].intensity, np.linspace(0, 1, 17))[0])
    a = intensity_histogram(imgs, 16)
    b = intensity_histogram(imgs[::-1], 16)
    np.testing.assert_array_equal(a.counts, b.counts)
    merged = intensity_histogram(imgs[:2], 16).merge(intensity_histogram(imgs[2:], 16))
    np.testing.assert_array_equal(merged.counts, a.counts)


def test_histogram_errors():
    with pytest.raises(EmptyDataset):
        intensity_histogram([])
    with pytest.raises(ValueError):
        intensity_histogram([fimg(np.zeros((2, 2)))], bins=1)


def test_histogram_kl_examples(rng):
    e = np.linspace(0, 1, 3)
    p, q = histogram_from_counts(e, [1, 0]), histogram_from_counts(e, [1, 1])
    assert histogram_kl(p, q) == pytest.approx(math.log(2), abs=1e-8)
    assert histogram_kl(q, q) == 0.0
    a = intensity_histogram([fimg(rng.random((8, 8)) ** 2)], 8)
    b = intensity_histogram([fimg(rng.random((8, 8)))], 8)
    assert histogram_kl(a, b) != histogram_kl(b, a)
    with pytest.raises(BinningMismatch):
        histogram_kl(a, intensity_histogram([fimg(rng.random((8, 8)))], 9))


def counting_oracle(labels):
    counts = [0] * 7
    for lab in labels:
        for v in np.asarray(lab.labels).ravel().tolist():
            if v != BACKGROUND:
                counts[v] += 1
    tot = sum(counts)
    return [c / tot for c in counts]


def test_class_proportions(rng):
    bg = LabelImage(np.full((4, 4), BACKGROUND, np.uint8))
    r = class_pixel_proportions([bg])
    assert r.all_background and not r.fractions.any()
    road = LabelImage(np.full((4, 4), 4, np.uint8))
    np.testing.assert_array_equal(class_pixel_proportions([road]).fractions,
                                  [0, 0, 0, 0, 1, 0, 0])
    mixed = [LabelImage(rng.choice([0, 1, 2, 3, 4, 5, 6, BACKGROUND], (6, 6)).astype(np.uint8))
             for _ in range(10)]
    got = class_pixel_proportions(mixed)
    assert got.fractions.tolist() == counting_oracle(mixed)
    assert got.fractions.sum() == pytest.approx(1.0)
    with pytest.raises(EmptyDataset):
        class_pixel_proportions([])


def test_csv_outputs(tmp_path, rng):
    h = intensity_histogram([fimg(rng.random((4, 4)))], 4)
    write_histogram_csv(tmp_path / "h.csv", h)
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,frequency" and len(lines) == 5
    write_proportions_csv(tmp_path / "p.csv", {"a": class_pixel_proportions(
        [LabelImage(np.zeros((2, 2), np.uint8))])})
    assert (tmp_path / "p.csv").read_text().splitlines()[1].startswith("0,vehicle,1.0")
