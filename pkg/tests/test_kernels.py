"""The compiled and pure-Python kernels must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from advtune import _kernels

py = _kernels.fallback
cy = _kernels.compiled
needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def random_rects(rng, n, spread=20.0):
    return np.column_stack([rng.uniform(0, spread, n), rng.uniform(0, spread, n),
                            rng.uniform(0.2, 3, n), rng.uniform(0.2, 3, n),
                            rng.uniform(0, 2 * np.pi, n)])


@needs_ext
def test_overlap_parity(rng):
    for _ in range(500):
        a, b = random_rects(rng, 2, spread=4.0)
        assert cy.overlap_fraction(a, b) == pytest.approx(py.overlap_fraction(a, b), abs=1e-12)


@needs_ext
@pytest.mark.parametrize("k", [1.0, 1000.0])
def test_energy_and_max_overlap_parity(rng, k):
    for n in (0, 1, 2, 15, 40):
        r = random_rects(rng, n)
        assert cy.gibbs_energy(r, k, 1e6) == pytest.approx(py.gibbs_energy(r, k, 1e6), rel=1e-12)
        assert cy.max_overlap(r) == pytest.approx(py.max_overlap(r), abs=1e-12)


@needs_ext
def test_pair_energy_parity():
    for L in (0.0, 1e-4, 1e-3, 0.01, 0.5, 1.0):
        assert cy.pair_energy(L, 1000.0, 1e6) == py.pair_energy(L, 1000.0, 1e6)


@needs_ext
def test_paint_parity(rng):
    r = random_rects(rng, 30)
    ids = np.arange(30, dtype=np.int32)
    args = (0.0, 20.0, 20.0 / 24, 20.0 / 24, 24, 24)
    np.testing.assert_array_equal(np.asarray(cy.paint_labels(r, ids, *args)),
                                  np.asarray(py.paint_labels(r, ids, *args)))
    np.testing.assert_array_equal(np.asarray(cy.paint_mask(r, *args)),
                                  np.asarray(py.paint_mask(r, *args)))


@needs_ext
def test_kde_parity(rng):
    x, w, g = rng.random(300), rng.random(300), np.linspace(0, 1, 32)
    np.testing.assert_allclose(np.asarray(cy.weighted_kde(x, w, g, 0.1)),
                               py.weighted_kde(x, w, g, 0.1), rtol=1e-12)


def test_pure_python_switch():
    env = dict(os.environ, ADVTUNE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import advtune; print(advtune.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_name():
    assert _kernels.BACKEND in ("cython", "python")
    if cy is not None and os.environ.get("ADVTUNE_PURE_PYTHON", "0") in ("", "0"):
        assert _kernels.BACKEND == "cython"
