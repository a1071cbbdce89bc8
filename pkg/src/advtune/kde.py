"""Classifier-weighted Gaussian KDE of realness over prior bins.

For one parameter dimension with range-normalized sample values ``t_v``
and discriminator scores ``w_v``::

    table[g] = sum_v w_v * exp(-(g - t_v)^2 / (2 h^2)) / (h * sqrt(2 pi))

evaluated at the normalized bin centers ``g``. There is no division by the
sample count and no boundary correction; tables are max-normalized by the
prior update anyway.

`likelihood_tables` also offers a ``"ratio"`` mode, the same sum divided
by the unweighted KDE of the samples. The tuning loop uses it by default:
the plain weighted sum still carries the density of the prior the samples
were drawn from, so multiplying it into that prior squares the prior on
every update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import LengthMismatch
from .priors import ParameterSpace

DEFAULT_BANDWIDTH = 0.1
LIKELIHOOD_MODES = ("weighted", "ratio")


@dataclass(frozen=True)
class WeightedSample:
    theta_value: float
    weight: float

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight {self.weight} outside [0, 1]")


def weighted_kde(values, weights, grid, h: float = DEFAULT_BANDWIDTH) -> np.ndarray:
    """Weighted Gaussian KDE sum evaluated on ``grid``; empty input gives zeros."""
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    values = np.asarray(values, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if values.size != weights.size:
        raise LengthMismatch(f"{values.size} values vs {weights.size} weights")
    if values.size == 0:
        return np.zeros(grid.size)
    return np.asarray(_kernels.weighted_kde(values, weights, grid, float(h)))


def kde_from_samples(samples, grid, h: float = DEFAULT_BANDWIDTH) -> np.ndarray:
    samples = list(samples)
    return weighted_kde([s.theta_value for s in samples], [s.weight for s in samples],
                        grid, h)


def silverman_bandwidth(values, weights=None) -> float:
    """Rule-of-thumb bandwidth 1.06 * sigma * n_eff^(-1/5) (weighted)."""
    values = np.asarray(values, dtype=np.float64)
    w = np.ones_like(values) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.sum() <= 0 or values.size < 2:
        return DEFAULT_BANDWIDTH
    mu = np.average(values, weights=w)
    sigma = np.sqrt(np.average((values - mu) ** 2, weights=w))
    n_eff = w.sum() ** 2 / np.sum(w * w)
    h = 1.06 * sigma * n_eff ** -0.2
    return float(h) if h > 0 else DEFAULT_BANDWIDTH


def likelihood_tables(thetas, scores, space: ParameterSpace,
                      h: float | str = DEFAULT_BANDWIDTH,
                      mode: str = "weighted") -> list[np.ndarray]:
    """Per-dimension realness tables on the prior's bin centers.

    Parameters
    ----------
    thetas : (n, D) array or sequence of objects with ``to_vector()``
    scores : (n,) discriminator realness probabilities
    h : bandwidth on the normalized axis, or ``"silverman"``
    mode : ``"weighted"`` returns the weighted KDE sum. ``"ratio"``
        divides it by the unweighted KDE of the same samples, giving a
        kernel-regression estimate of the mean score near each bin that
        does not carry the sampling density of the current prior.
    """
    if mode not in LIKELIHOOD_MODES:
        raise ValueError(f"unknown likelihood mode {mode!r}")
    thetas = list(thetas) if not isinstance(thetas, np.ndarray) else thetas
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if len(thetas) != scores.size:
        raise LengthMismatch(f"{len(thetas)} parameter vectors vs {scores.size} scores")
    if len(thetas) == 0:
        X = np.zeros((0, len(space)))
    elif isinstance(thetas, np.ndarray):
        X = np.asarray(thetas, dtype=np.float64).reshape(len(thetas), -1)
    else:
        X = np.stack([np.asarray(t.to_vector() if hasattr(t, "to_vector") else t,
                                 dtype=np.float64) for t in thetas])
    if X.shape[1] != len(space):
        raise LengthMismatch(f"vectors have {X.shape[1]} dims, space has {len(space)}")
    out = []
    for d, dim in enumerate(space.dims):
        t = dim.normalize(X[:, d])
        hd = silverman_bandwidth(t, scores) if h == "silverman" else float(h)
        grid = dim.centers()
        num = weighted_kde(t, scores, grid, hd)
        if mode == "ratio":
            den = weighted_kde(t, np.ones_like(t), grid, hd)
            num = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        out.append(num)
    return out
