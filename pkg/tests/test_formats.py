import numpy as np
import pytest

from advtune.formats import (feature_columns, is_dataset_dir, load_dataset, read_feature_csv,
                             read_feature_pgm, read_label_pgm, read_pgm, write_dataset,
                             write_feature_csv, write_feature_pgm, write_label_pgm, write_pgm)
from advtune.renderer import render_pair
from advtune.scene_model import SceneParameters, sample_layout

BUSY = SceneParameters(object_rate_per_class=(6e-4, 8e-4, 3e-4, 5e-4, 1.5e-4, 2e-4, 1e-4))


def sample(seed):
    return render_pair(BUSY, sample_layout(BUSY, rng=seed))


def test_pgm_header_and_bytes(tmp_path):
    p = tmp_path / "a.pgm"
    write_pgm(p, np.array([[0, 1, 2], [3, 4, 255]]), 255)
    raw = p.read_bytes()
    assert raw.startswith(b"P5\n3 2\n255\n")
    assert raw[len(b"P5\n3 2\n255\n"):] == bytes([0, 1, 2, 3, 4, 255])
    write_pgm(p, np.array([[258]]), 65535)
    assert p.read_bytes().endswith(b"\x01\x02")


def test_pgm_stream_round_trip(tmp_path, rng):
    imgs = [rng.integers(0, 65536, (5, 7)), rng.integers(0, 2, (5, 7))]
    write_pgm(tmp_path / "s.pgm", imgs, [65535, 1])
    back = read_pgm(tmp_path / "s.pgm")
    assert [m for _, m in back] == [65535, 1]
    for a, (b, _) in zip(imgs, back):
        np.testing.assert_array_equal(a, b)


def test_pgm_rejects_out_of_range(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "x.pgm", np.array([[300]]), 255)


def test_feature_and_label_files(tmp_path):
    img, lab = sample(0)
    write_feature_pgm(tmp_path / "f.pgm", img)
    write_label_pgm(tmp_path / "l.pgm", lab)
    f = read_feature_pgm(tmp_path / "f.pgm")
    np.testing.assert_allclose(f.intensity, img.intensity, atol=0.5 / 65535)
    np.testing.assert_array_equal(f.occupancy, img.occupancy)
    np.testing.assert_array_equal(read_label_pgm(tmp_path / "l.pgm").labels, lab.labels)


def test_feature_csv(tmp_path):
    imgs = [sample(s)[0] for s in range(3)]
    write_feature_csv(tmp_path / "features.csv", imgs, ["a", "b", "c"])
    head = (tmp_path / "features.csv").read_text().splitlines()[0].split(",")
    assert head[:3] == ["sample_id", "ch0_y0_x0", "ch0_y0_x1"]
    assert head[1:] == feature_columns(32, 32)
    ids, back = read_feature_csv(tmp_path / "features.csv")
    assert ids == ["a", "b", "c"]
    for a, b in zip(imgs, back):
        np.testing.assert_array_equal(a.intensity, b.intensity)
    assert is_dataset_dir(tmp_path)
    assert len(load_dataset(tmp_path)) == 3


def test_dataset_round_trip(tmp_path, rng):
    pairs = [sample(s) for s in range(4)]
    params = rng.random((4, 16))
    write_dataset(tmp_path, [p[0] for p in pairs], [p[1] for p in pairs], params)
    ds = load_dataset(tmp_path)
    assert ds.ids == ["000000", "000001", "000002", "000003"]
    np.testing.assert_array_equal(ds.params, params)
    for (img, lab), f, l in zip(pairs, ds.features, ds.labels):
        np.testing.assert_array_equal(l.labels, lab.labels)
        np.testing.assert_array_equal(f.occupancy, img.occupancy)


def test_empty_dataset_and_missing(tmp_path):
    write_dataset(tmp_path / "e", [])
    assert len(load_dataset(tmp_path / "e")) == 0
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "nothing")
