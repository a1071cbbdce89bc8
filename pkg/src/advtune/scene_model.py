"""Scene-parameter space and marked point process layouts.

A layout is a finite set of marked points (class, position, orientation,
scale) drawn from independent per-class Poisson processes and reweighted
by the Gibbs non-overlap density ``exp(-E(o))`` with

    E(o) = sum over unordered pairs of (exp(k * L(oi, oj)) - 1)

where ``L`` is intersection area over the smaller footprint area.
Because ``exp(-E) <= 1`` the Poisson proposal is a valid envelope and
plain rejection is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import RetryExhausted

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ObjectClass:
    id: int
    name: str
    half_width: float
    half_depth: float
    height: float


# heights are distinct so painter's order never ties across classes
CLASSES: tuple[ObjectClass, ...] = (
    ObjectClass(0, "vehicle", 1.0, 2.25, 1.5),
    ObjectClass(1, "pedestrian", 0.3, 0.3, 1.8),
    ObjectClass(2, "building", 5.0, 5.0, 12.0),
    ObjectClass(3, "vegetation", 1.5, 1.5, 4.0),
    ObjectClass(4, "road", 3.5, 15.0, 0.02),
    ObjectClass(5, "ground", 4.0, 4.0, 0.01),
    ObjectClass(6, "sky", 6.0, 6.0, 30.0),
)
CLASS_NAMES: tuple[str, ...] = tuple(c.name for c in CLASSES)
N_CLASSES = len(CLASSES)
ROAD = 4

_HALF_W = np.array([c.half_width for c in CLASSES])
_HALF_D = np.array([c.half_depth for c in CLASSES])
CLASS_HEIGHTS = np.array([c.height for c in CLASSES])


@dataclass(frozen=True)
class Region:
    """Axis-aligned world rectangle in meters."""

    x0: float = 0.0
    y0: float = 0.0
    x1: float = 100.0
    y1: float = 100.0

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"region must have positive area: {self}")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def center(self) -> tuple[float, float]:
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


@dataclass(frozen=True)
class ObjectMark:
    class_id: int
    x: float
    y: float
    orientation: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0 <= self.class_id < N_CLASSES:
            raise ValueError(f"unknown class id {self.class_id}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @property
    def object_class(self) -> ObjectClass:
        return CLASSES[self.class_id]

    @property
    def height(self) -> float:
        return CLASSES[self.class_id].height * self.scale

    def rect(self) -> np.ndarray:
        """Footprint as ``(cx, cy, half_w, half_d, theta)``."""
        c = CLASSES[self.class_id]
        return np.array([self.x, self.y, c.half_width * self.scale,
                         c.half_depth * self.scale, self.orientation])


@dataclass(frozen=True)
class GibbsConfig:
    k: float = 1000.0
    energy_cap: float = 1e6
    max_retries: int = 1000
    scale_low: float = 0.8
    scale_high: float = 1.25

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError("k must be a positive finite number")
        if not (self.energy_cap > 0 and math.isfinite(self.energy_cap)):
            raise ValueError("energy_cap must be positive and finite")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")
        if not 0 < self.scale_low <= self.scale_high:
            raise ValueError("scale band must satisfy 0 < low <= high")


@dataclass
class SceneLayout:
    objects: list[ObjectMark] = field(default_factory=list)
    energy: float = 0.0
    attempts: int = 1

    def rects(self) -> np.ndarray:
        if not self.objects:
            return np.zeros((0, 5))
        return np.stack([o.rect() for o in self.objects])

    def class_ids(self) -> np.ndarray:
        return np.array([o.class_id for o in self.objects], dtype=np.int32)

    def heights(self) -> np.ndarray:
        return np.array([o.height for o in self.objects], dtype=np.float64)

    def __len__(self):
        return len(self.objects)


def _rates_bounds():
    # upper bounds in objects per square meter (100 x 100 m default region)
    per_1e4 = (6.0, 8.0, 3.0, 5.0, 1.5, 2.0, 1.0)
    return [(f"rate_{c.name}", 0.0, r * 1e-4) for c, r in zip(CLASSES, per_1e4)]


# (name, lower, upper); the order here is the vector serialization order
PARAMETER_RANGES: tuple[tuple[str, float, float], ...] = (
    ("light_intensity", 0.0, 6.0),
    ("sun_azimuth", 0.0, TWO_PI),
    ("sun_elevation", 0.0, math.pi / 2),
    ("color_temperature", 0.0, 1.0),
    ("scatter_density", 0.0, 1.0),
    ("scatter_coefficient", 0.0, 1.0),
    ("camera_height", 1.0, 2.0),
    ("camera_pitch", -0.25, 0.25),
    ("camera_fov", 0.6, 1.6),
    *_rates_bounds(),
)
PARAMETER_NAMES: tuple[str, ...] = tuple(r[0] for r in PARAMETER_RANGES)
N_PARAMETERS = len(PARAMETER_RANGES)


@dataclass(frozen=True)
class SceneParameters:
    """One point in scene-parameter space.

    ``to_vector`` order: the nine photometry/camera scalars in field order,
    then the seven per-class Poisson rates in class-id order.
    """

    light_intensity: float = 3.0
    sun_azimuth: float = 0.0
    sun_elevation: float = math.pi / 4
    color_temperature: float = 0.5
    scatter_density: float = 0.0
    scatter_coefficient: float = 0.0
    camera_height: float = 1.5
    camera_pitch: float = 0.0
    camera_fov: float = 1.1
    object_rate_per_class: tuple[float, ...] = (0.0,) * N_CLASSES

    def __post_init__(self):
        rates = tuple(float(r) for r in self.object_rate_per_class)
        if len(rates) != N_CLASSES:
            raise ValueError(f"expected {N_CLASSES} rates, got {len(rates)}")
        object.__setattr__(self, "object_rate_per_class", rates)

    def to_vector(self) -> np.ndarray:
        scalars = [getattr(self, f.name) for f in fields(self)[:-1]]
        return np.array(scalars + list(self.object_rate_per_class), dtype=np.float64)

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "SceneParameters":
        vec = [float(v) for v in vec]
        if len(vec) != N_PARAMETERS:
            raise ValueError(f"expected {N_PARAMETERS} values, got {len(vec)}")
        return cls(*vec[:9], object_rate_per_class=tuple(vec[9:]))

    def validate(self) -> None:
        """Raise ValueError if a field is outside its permissible range.

        Upper bounds of the angular fields are treated as closed here;
        sampling never produces them.
        """
        for (name, lo, hi), v in zip(PARAMETER_RANGES, self.to_vector()):
            if not (lo <= v <= hi):
                raise ValueError(f"{name}={v} outside [{lo}, {hi}]")


def overlap_fraction(a: ObjectMark, b: ObjectMark) -> float:
    """Intersection area over the smaller footprint area, in [0, 1]."""
    return _kernels.overlap_fraction(a.rect(), b.rect())


def _energy_from_rects(rects: np.ndarray, cfg: GibbsConfig) -> float:
    if rects.shape[0] < 2:
        return 0.0
    return float(_kernels.gibbs_energy(rects, cfg.k, cfg.energy_cap))


def gibbs_energy(objects: Iterable[ObjectMark], cfg: GibbsConfig = GibbsConfig()) -> float:
    """Capped pairwise non-overlap energy of a layout."""
    objects = list(objects)
    if len(objects) < 2:
        return 0.0
    return _energy_from_rects(np.stack([o.rect() for o in objects]), cfg)


def pair_energy(L: float, cfg: GibbsConfig = GibbsConfig()) -> float:
    """Energy contribution of one pair with overlap fraction ``L``."""
    return float(_kernels.pair_energy(float(L), cfg.k, cfg.energy_cap))


def layout_density_unnorm(objects: Iterable[ObjectMark],
                          cfg: GibbsConfig = GibbsConfig()) -> float:
    return math.exp(-gibbs_energy(objects, cfg))


def max_pairwise_overlap(objects: Iterable[ObjectMark]) -> float:
    objects = list(objects)
    if len(objects) < 2:
        return 0.0
    return float(_kernels.max_overlap(np.stack([o.rect() for o in objects])))


def accept_layout(energy: float, rng) -> bool:
    """One Bernoulli(exp(-energy)) acceptance draw; energy 0 always accepts."""
    return bool(rng.random() < math.exp(-energy))


def _draw_candidate(rates, region, cfg, rng):
    counts = rng.poisson(np.asarray(rates) * region.area)
    ids = np.repeat(np.arange(N_CLASSES, dtype=np.int32), counts)
    n = ids.size
    xs = rng.uniform(region.x0, region.x1, n)
    ys = rng.uniform(region.y0, region.y1, n)
    theta = rng.uniform(0.0, TWO_PI, n)
    roads = ids == ROAD
    if roads.any():
        theta[roads] = rng.integers(0, 2, int(roads.sum())) * (math.pi / 2)
    scale = np.exp(rng.uniform(math.log(cfg.scale_low), math.log(cfg.scale_high), n))
    rects = np.column_stack([xs, ys, _HALF_W[ids] * scale, _HALF_D[ids] * scale, theta])
    return ids, rects, scale


def sample_layout(theta: SceneParameters, region: Region = Region(),
                  cfg: GibbsConfig = GibbsConfig(), rng=None) -> SceneLayout:
    """Draw one layout by rejection against ``exp(-E)``.

    Raises
    ------
    RetryExhausted
        If ``cfg.max_retries`` candidates are all rejected.
    """
    rng = np.random.default_rng(rng)
    rates = theta.object_rate_per_class
    for attempt in range(1, cfg.max_retries + 1):
        ids, rects, scale = _draw_candidate(rates, region, cfg, rng)
        energy = _energy_from_rects(rects, cfg)
        if accept_layout(energy, rng):
            objects = [ObjectMark(int(c), float(r[0]), float(r[1]), float(r[4]), float(s))
                       for c, r, s in zip(ids, rects, scale)]
            return SceneLayout(objects, energy, attempts=attempt)
    raise RetryExhausted(
        f"no layout accepted in {cfg.max_retries} attempts; "
        f"rates {rates} are too high for region area {region.area}")


# -- text export -------------------------------------------------------------

LAYOUT_HEADER = "# advtune-layout v1"


def write_layout(path, layout: SceneLayout, region: Region, seed=None,
                 cfg: GibbsConfig = GibbsConfig()) -> None:
    """Write a layout as line-delimited records.

    Format::

        # advtune-layout v1
        # region <x0> <y0> <x1> <y1>
        # seed <int|none>
        # k <k> energy <E>
        class_id x y orientation scale
        <int> <float> <float> <float> <float>
        ...

    Floats are written with ``repr`` so they round-trip exactly.
    """
    lines = [
        LAYOUT_HEADER,
        f"# region {region.x0!r} {region.y0!r} {region.x1!r} {region.y1!r}",
        f"# seed {'none' if seed is None else int(seed)}",
        f"# k {cfg.k!r} energy {layout.energy!r}",
        "class_id x y orientation scale",
    ]
    for o in layout.objects:
        lines.append(f"{o.class_id} {o.x!r} {o.y!r} {o.orientation!r} {o.scale!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_layout(path):
    """Inverse of `write_layout`; returns ``(layout, region, seed)``."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != LAYOUT_HEADER:
        raise ValueError(f"{path}: not an advtune layout file")
    region = Region(*(float(v) for v in lines[1].split()[2:6]))
    seed_tok = lines[2].split()[2]
    seed = None if seed_tok == "none" else int(seed_tok)
    energy = float(lines[3].split()[4])
    objects = []
    for ln in lines[5:]:
        cid, x, y, th, s = ln.split()
        objects.append(ObjectMark(int(cid), float(x), float(y), float(th), float(s)))
    return SceneLayout(objects, energy), region, seed
