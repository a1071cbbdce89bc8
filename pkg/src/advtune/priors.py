"""Factorized, discretized priors over scene parameters.

Each dimension carries a table of bin values in [0, 1] whose maximum is
1. The joint prior is the product of the tables. Sampling proposes from
the uniform distribution on the dimension's range and accepts with the
table value of the proposal's bin; since no table value exceeds 1 the
uniform proposal is an envelope for every table the loop produces.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateTable
from .scene_model import PARAMETER_RANGES, SceneParameters

DEFAULT_BINS = 32
KL_EPSILON = 1e-9
PRIOR_FORMAT = "advtune-prior/1"


@dataclass(frozen=True)
class Dim:
    name: str
    lower: float
    upper: float
    bins: int = DEFAULT_BINS

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower must be < upper")
        if self.bins < 2:
            raise ValueError(f"{self.name}: need at least 2 bins")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def normalize(self, values):
        return (np.asarray(values, dtype=np.float64) - self.lower) / self.width

    def bin_index(self, values) -> np.ndarray:
        idx = np.floor(self.normalize(values) * self.bins).astype(np.int64)
        return np.clip(idx, 0, self.bins - 1)

    def centers(self) -> np.ndarray:
        """Bin centers on the normalized [0, 1] axis."""
        return (np.arange(self.bins) + 0.5) / self.bins

    def edges(self) -> np.ndarray:
        return self.lower + self.width * np.arange(self.bins + 1) / self.bins


@dataclass(frozen=True)
class ParameterSpace:
    dims: tuple[Dim, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise ValueError("duplicate dimension names")

    def __len__(self):
        return len(self.dims)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def is_scene_space(self) -> bool:
        """True when dims line up with `SceneParameters` serialization."""
        return self.names == [r[0] for r in PARAMETER_RANGES]

    def to_dict(self) -> list[dict]:
        return [{"name": d.name, "lower": d.lower, "upper": d.upper, "bins": d.bins}
                for d in self.dims]

    @classmethod
    def from_dict(cls, items) -> "ParameterSpace":
        return cls(tuple(Dim(str(d["name"]), float(d["lower"]), float(d["upper"]),
                             int(d["bins"])) for d in items))


def scene_space(bins: int | Sequence[int] = DEFAULT_BINS) -> ParameterSpace:
    """Parameter space over all `SceneParameters` fields in vector order."""
    if isinstance(bins, int):
        bins = [bins] * len(PARAMETER_RANGES)
    return ParameterSpace(tuple(Dim(n, lo, hi, b)
                                for (n, lo, hi), b in zip(PARAMETER_RANGES, bins)))


@dataclass(frozen=True, eq=False)
class PriorTable:
    dim: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, PriorTable):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.dim, self.values.tobytes()))

    def probabilities(self) -> np.ndarray:
        """Sum-normalized copy of the table."""
        s = self.values.sum()
        if not s > 0:
            raise DegenerateTable(f"table for dim {self.dim} sums to zero")
        return self.values / s


@dataclass(frozen=True)
class JointPrior:
    space: ParameterSpace
    tables: tuple[PriorTable, ...]
    iteration: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(self.tables))
        if len(self.tables) != len(self.space):
            raise ValueError("one table per dimension required")
        for d, t in zip(self.space.dims, self.tables):
            if len(t) != d.bins:
                raise ValueError(f"{d.name}: table has {len(t)} bins, space says {d.bins}")

    def table(self, name: str) -> PriorTable:
        return self.tables[self.space.index(name)]

    def to_json(self) -> dict:
        return {
            "format": PRIOR_FORMAT,
            "iteration": self.iteration,
            "space": self.space.to_dict(),
            "tables": [t.values.tolist() for t in self.tables],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "JointPrior":
        if doc.get("format") != PRIOR_FORMAT:
            raise ValueError(f"unsupported prior format {doc.get('format')!r}")
        space = ParameterSpace.from_dict(doc["space"])
        tables = tuple(PriorTable(i, np.array(v, dtype=np.float64))
                       for i, v in enumerate(doc["tables"]))
        return cls(space, tables, int(doc.get("iteration", 0)))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "JointPrior":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def uniform_prior(space: ParameterSpace) -> JointPrior:
    return JointPrior(space, tuple(PriorTable(i, np.ones(d.bins))
                                   for i, d in enumerate(space.dims)), 0)


def prior_from_tables(space: ParameterSpace, tables, iteration: int = 0) -> JointPrior:
    """Build a prior from raw per-dimension arrays, max-normalizing each."""
    return JointPrior(space, tuple(max_normalize(PriorTable(i, t))
                                   for i, t in enumerate(tables)), iteration)


def max_normalize(table: PriorTable) -> PriorTable:
    v = table.values
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ValueError(f"table for dim {table.dim} has negative or non-finite entries")
    m = v.max() if v.size else 0.0
    if not m > 0:
        raise DegenerateTable(f"table for dim {table.dim} is all zeros")
    return PriorTable(table.dim, v / m)


def bayes_update(prior: JointPrior, likelihood) -> JointPrior:
    """Multiply each table by its likelihood table and max-normalize."""
    likelihood = list(likelihood)
    if len(likelihood) != len(prior.tables):
        raise ValueError("one likelihood table per dimension required")
    new = []
    for t, lk in zip(prior.tables, likelihood):
        lk = np.asarray(getattr(lk, "values", lk), dtype=np.float64)
        if lk.shape != t.values.shape:
            raise ValueError(f"dim {t.dim}: likelihood shape {lk.shape} != {t.values.shape}")
        if np.any(lk < 0):
            raise ValueError(f"dim {t.dim}: likelihood has negative entries")
        new.append(max_normalize(PriorTable(t.dim, t.values * lk)))
    return JointPrior(prior.space, tuple(new), prior.iteration + 1)


def _sample_dim(dim: Dim, values: np.ndarray, n: int, rng) -> np.ndarray:
    out = np.empty(n)
    filled = 0
    while filled < n:
        k = n - filled
        # oversample by the inverse acceptance rate to keep the loop short
        batch = int(min(max(2 * k * values.size / max(values.sum(), 1e-12), k), 10 * k + 64))
        u = rng.uniform(dim.lower, dim.upper, batch)
        acc = rng.random(batch) < values[dim.bin_index(u)]
        got = u[acc][:k]
        out[filled:filled + got.size] = got
        filled += got.size
    return out


def sample_vectors(prior: JointPrior, n: int, rng=None) -> np.ndarray:
    """Draw ``n`` parameter vectors, shape ``(n, len(space))``.

    Each dimension is sampled independently by uniform-envelope rejection;
    accepted values are uniform within their bin.
    """
    rng = np.random.default_rng(rng)
    for t in prior.tables:
        if not t.values.max() > 0:
            raise DegenerateTable(f"dim {t.dim} has no positive bin")
    cols = [_sample_dim(d, t.values, n, rng) for d, t in zip(prior.space.dims, prior.tables)]
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def sample_theta(prior: JointPrior, rng=None) -> SceneParameters:
    if not prior.space.is_scene_space:
        raise ValueError("prior space does not match SceneParameters; use sample_vectors")
    return SceneParameters.from_vector(sample_vectors(prior, 1, rng)[0])


def table_kl(p, q, eps: float = KL_EPSILON) -> float:
    """KL(p || q) between two tables read as distributions.

    Both are sum-normalized; ``q`` then gets ``eps`` extra mass per bin
    (not renormalized) so every log is finite. That can push the sum a
    hair below zero when ``p == q``; the result is clamped at 0, which makes
    identical tables read exactly 0. Terms with ``p_i == 0`` contribute 0.
    """
    p = np.asarray(getattr(p, "values", p), dtype=np.float64)
    q = np.asarray(getattr(q, "values", q), dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    if not (p.sum() > 0 and q.sum() > 0):
        raise DegenerateTable("KL of an all-zero table")
    p = p / p.sum()
    q = q / q.sum()
    q = q + eps
    nz = p > 0
    return max(0.0, float(np.sum(p[nz] * np.log(p[nz] / q[nz]))))


def total_variation(p, q) -> float:
    p = np.asarray(getattr(p, "values", p), dtype=np.float64)
    q = np.asarray(getattr(q, "values", q), dtype=np.float64)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def entropy_nats(p) -> float:
    p = np.asarray(getattr(p, "values", p), dtype=np.float64)
    p = p / p.sum()
    nz = p > 0
    return -float(np.sum(p[nz] * np.log(p[nz])))


def bin_frequencies(samples, dim: Dim) -> np.ndarray:
    return np.bincount(dim.bin_index(samples), minlength=dim.bins) / max(len(samples), 1)


__all__ = [
    "Dim", "ParameterSpace", "PriorTable", "JointPrior", "scene_space", "uniform_prior",
    "prior_from_tables", "max_normalize", "bayes_update", "sample_vectors",
    "sample_theta", "table_kl", "total_variation", "entropy_nats", "bin_frequencies",
    "DEFAULT_BINS", "KL_EPSILON",
]
