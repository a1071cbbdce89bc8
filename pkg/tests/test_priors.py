import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from advtune.errors import DegenerateTable
from advtune.priors import (Dim, JointPrior, ParameterSpace, PriorTable, bayes_update,
                            bin_frequencies, max_normalize, prior_from_tables, sample_theta,
                            sample_vectors, scene_space, table_kl, total_variation,
                            uniform_prior)


def one_dim(bins=10, lo=0.0, hi=1.0):
    return ParameterSpace((Dim("x", lo, hi, bins),))


def test_uniform_prior():
    p = uniform_prior(one_dim(10))
    assert p.iteration == 0
    np.testing.assert_array_equal(p.tables[0].values, np.ones(10))
    s = scene_space()
    assert (s.dims[0].lower, s.dims[0].upper) == (0.0, 6.0)
    cam = s.dims[s.index("camera_height")]
    assert (cam.lower, cam.upper) == (1.0, 2.0)
    assert s.is_scene_space and len(s) == 16


def test_space_validation():
    with pytest.raises(ValueError):
        Dim("a", 1.0, 1.0)
    with pytest.raises(ValueError):
        Dim("a", 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        ParameterSpace((Dim("a", 0, 1), Dim("a", 0, 2)))


def test_max_normalize():
    np.testing.assert_allclose(max_normalize(PriorTable(0, np.array([0.2, 0.4]))).values,
                               [0.5, 1.0])
    np.testing.assert_array_equal(max_normalize(PriorTable(0, np.ones(3))).values, np.ones(3))
    with pytest.raises(DegenerateTable):
        max_normalize(PriorTable(0, np.zeros(2)))
    with pytest.raises(ValueError):
        max_normalize(PriorTable(0, np.array([-1.0, 1.0])))


def test_bayes_update_examples():
    sp = one_dim(2)
    u = uniform_prior(sp)
    np.testing.assert_allclose(bayes_update(u, [[0.2, 0.4]]).tables[0].values, [0.5, 1.0])
    p = prior_from_tables(sp, [[1.0, 0.5]])
    np.testing.assert_array_equal(bayes_update(p, [np.ones(2)]).tables[0].values, [1.0, 0.5])
    np.testing.assert_allclose(bayes_update(p, [[0.5, 1.0]]).tables[0].values, [1.0, 1.0])
    assert bayes_update(p, [np.ones(2)]).iteration == 1
    with pytest.raises(DegenerateTable):
        bayes_update(p, [np.zeros(2)])


tables = st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4).map(np.array)


@settings(max_examples=100, deadline=None)
@given(st.lists(tables, min_size=1, max_size=6))
def test_updates_keep_tables_normalized(lks):
    p = uniform_prior(one_dim(4))
    for lk in lks:
        p = bayes_update(p, [lk])
        v = p.tables[0].values
        assert v.max() == 1.0 and v.min() >= 0.0


@settings(max_examples=100, deadline=None)
@given(tables, tables)
def test_update_order_commutes(a, b):
    p = uniform_prior(one_dim(4))
    ab = bayes_update(bayes_update(p, [a]), [b]).tables[0].values
    ba = bayes_update(bayes_update(p, [b]), [a]).tables[0].values
    np.testing.assert_allclose(ab, ba, rtol=1e-12)


def test_single_bin_table_samples_only_there(rng):
    t = np.zeros(8)
    t[5] = 1.0
    x = sample_vectors(prior_from_tables(one_dim(8), [t]), 5000, rng)[:, 0]
    assert np.all((x >= 5 / 8) & (x < 6 / 8))


def test_uniform_chi_square(rng):
    x = sample_vectors(uniform_prior(one_dim(10)), 100_000, rng)[:, 0]
    counts = bin_frequencies(x, one_dim(10).dims[0]) * x.size
    assert stats.chisquare(counts).pvalue > 0.01


def test_two_bin_frequencies(rng):
    dim = one_dim(2).dims[0]
    x = sample_vectors(prior_from_tables(one_dim(2), [[1.0, 0.5]]), 100_000, rng)[:, 0]
    f = bin_frequencies(x, dim)
    assert abs(f[0] - 2 / 3) < 0.01 and abs(f[1] - 1 / 3) < 0.01


def test_within_bin_uniform(rng):
    x = sample_vectors(prior_from_tables(one_dim(4), [[0, 1, 0, 0]]), 20_000, rng)[:, 0]
    assert stats.kstest((x - 0.25) / 0.25, "uniform").pvalue > 0.01


def test_sample_theta_in_range(rng):
    p = uniform_prior(scene_space())
    for _ in range(20):
        sample_theta(p, rng).validate()


def naive_kl(p, q, eps=1e-9):
    p = [v / sum(p) for v in p]
    q = [v / sum(q) + eps for v in q]
    return max(0.0, sum(a * math.log(a / b) for a, b in zip(p, q) if a > 0))


def test_table_kl_examples(rng):
    assert table_kl([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert table_kl([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-8)
    for _ in range(20):
        p, q = rng.random(32), rng.random(32)
        assert table_kl(p, q) == pytest.approx(naive_kl(p, q), abs=1e-12)
        assert table_kl(p, q) >= 0.0
    # finite even when q has empty bins
    assert math.isfinite(table_kl([1, 1], [1, 0]))


def test_total_variation():
    assert total_variation([1, 1], [1, 1]) == 0.0
    assert total_variation([1, 0], [0, 1]) == pytest.approx(1.0)


def test_prior_json_round_trip(tmp_path, rng):
    p = prior_from_tables(scene_space(), [rng.random(32) for _ in range(16)], iteration=3)
    path = tmp_path / "p.json"
    p.save(path)
    q = JointPrior.load(path)
    assert q.iteration == 3 and q.space == p.space
    for a, b in zip(p.tables, q.tables):
        np.testing.assert_array_equal(a.values, b.values)
    doc = json.loads(path.read_text())
    assert doc["format"] == "advtune-prior/1"
