"""JSON experiment configuration.

A config is one JSON object. Every section is optional and falls back to
library defaults; unknown keys anywhere are rejected. Relative paths are
resolved against the directory holding the config file, and the
effective config (`ExperimentConfig.to_dict`) uses absolute paths so it
can be re-run from anywhere.

Example::

    {
      "seed": 0,
      "space": {"bins": 32},
      "loop": {"n_v": 200, "max_iterations": 3},
      "target": {"source": "synthetic", "count": 600,
                 "bumps": {"light_intensity": {"mean": 0.75, "width": 0.12}}}
    }
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .discriminator import TrainConfig
from .errors import ConfigError
from .priors import JointPrior, ParameterSpace, prior_from_tables, scene_space, uniform_prior
from .renderer import RenderConfig
from .scene_model import PARAMETER_NAMES, GibbsConfig, Region
from .stats import DEFAULT_HIST_BINS
from .tuning import GeneratorConfig, LoopConfig

TARGET_SOURCES = ("synthetic", "directory")
_TOP_KEYS = ("seed", "output_dir", "space", "gibbs", "render", "features", "train", "loop",
             "target", "initial_prior", "generate", "stats")


def _reject_unknown(section: str, d: dict, allowed) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{section}: expected a JSON object, got {type(d).__name__}")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(extra)}")


def _build(cls, section: str, d: dict | None, skip=(), **conv):
    """Instantiate dataclass ``cls`` from ``d``; ValueErrors become ConfigError."""
    d = dict(d or {})
    names = [f.name for f in fields(cls) if f.name not in skip]
    _reject_unknown(section, d, names)
    for k, fn in conv.items():
        if k in d:
            d[k] = fn(d[k])
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def _plain(obj, skip=()):
    return {f.name: getattr(obj, f.name) for f in fields(obj) if f.name not in skip}


def _resolve(base: str, p):
    if p is None:
        return None
    p = os.path.expanduser(str(p))
    return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))


@dataclass(frozen=True)
class TargetSpec:
    """Where the target (real) features come from.

    ``synthetic``: ``count`` scenes drawn from Q, where Q is uniform except
    for dimensions listed in ``tables`` (explicit bin values) or ``bumps``
    (Gaussian bump ``mean``/``width`` on the normalized axis).
    ``directory``: a dataset directory readable by `formats.load_dataset`.
    """

    source: str = "synthetic"
    count: int = 2000
    tables: dict = field(default_factory=dict)
    bumps: dict = field(default_factory=dict)
    path: str | None = None

    def __post_init__(self):
        if self.source not in TARGET_SOURCES:
            raise ConfigError(f"target.source must be one of {TARGET_SOURCES}")
        if self.source == "directory" and not self.path:
            raise ConfigError("target.path is required when target.source is 'directory'")
        if self.source == "synthetic" and self.count < 1:
            raise ConfigError("target.count must be >= 1")
        for name, b in self.bumps.items():
            _reject_unknown(f"target.bumps.{name}", b, ("mean", "width"))
            if not float(b.get("width", 0.1)) > 0:
                raise ConfigError(f"target.bumps.{name}.width must be > 0")

    def q_tables(self, space: ParameterSpace) -> dict[str, np.ndarray]:
        """Target tables for every informative (non-uniform) dimension."""
        out = {}
        for name in sorted(set(self.tables) | set(self.bumps)):
            if name not in space.names:
                raise ConfigError(f"target: unknown dimension {name!r}")
            if name in self.tables and name in self.bumps:
                raise ConfigError(f"target: {name!r} given both as table and bump")
            dim = space.dims[space.index(name)]
            if name in self.tables:
                t = np.asarray(self.tables[name], dtype=np.float64)
                if t.shape != (dim.bins,) or np.any(t < 0) or not np.all(np.isfinite(t)) \
                        or t.max() <= 0:
                    raise ConfigError(f"target.tables.{name}: need {dim.bins} finite "
                                      "nonnegative values, not all zero")
            else:
                b = self.bumps[name]
                mu, w = float(b.get("mean", 0.5)), float(b.get("width", 0.1))
                t = np.exp(-(dim.centers() - mu) ** 2 / (2 * w * w))
            out[name] = t / t.max()
        return out

    def q_prior(self, space: ParameterSpace) -> JointPrior:
        q = self.q_tables(space)
        return prior_from_tables(space, [q.get(n, np.ones(d.bins))
                                         for n, d in zip(space.names, space.dims)])


@dataclass(frozen=True)
class GenerateSpec:
    prior: str | None = None
    count: int = 100

    def __post_init__(self):
        if self.count < 0:
            raise ConfigError("generate.count must be >= 0")


@dataclass(frozen=True)
class StatsSpec:
    dataset_a: str | None = None
    dataset_b: str | None = None
    bins: int = DEFAULT_HIST_BINS
    bins_b: int | None = None

    def __post_init__(self):
        if self.bins < 2 or (self.bins_b is not None and self.bins_b < 2):
            raise ConfigError("stats bins must be >= 2")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    output_dir: str | None = None
    bins: int | dict = 32
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    feature_mode: str = "summary"
    pool: int = 4
    train: TrainConfig = field(default_factory=TrainConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    target: TargetSpec = field(default_factory=TargetSpec)
    initial_prior: str | None = None
    generate: GenerateSpec = field(default_factory=GenerateSpec)
    stats: StatsSpec = field(default_factory=StatsSpec)

    # -- derived objects ------------------------------------------------------

    def space(self) -> ParameterSpace:
        if isinstance(self.bins, dict):
            per = [int(self.bins.get(n, 32)) for n in PARAMETER_NAMES]
        else:
            per = int(self.bins)
        return scene_space(per)

    def generator(self) -> GeneratorConfig:
        return GeneratorConfig(self.render, self.gibbs, self.feature_mode, self.pool)

    def loop_config(self) -> LoopConfig:
        return dataclasses.replace(self.loop, seed=self.seed, generator=self.generator(),
                                   train=self.train)

    def start_prior(self) -> JointPrior:
        space = self.space()
        if self.initial_prior is None:
            return uniform_prior(space)
        prior = load_prior(self.initial_prior)
        if prior.space != space:
            raise ConfigError(f"{self.initial_prior}: prior space does not match the "
                              "configured space")
        return prior

    def with_overrides(self, seed=None, output_dir=None, count=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=int(seed))
        if output_dir is not None:
            cfg = dataclasses.replace(cfg, output_dir=os.path.abspath(output_dir))
        if count is not None:
            cfg = dataclasses.replace(cfg, generate=GenerateSpec(cfg.generate.prior, int(count)))
        return cfg

    # -- (de)serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        r = self.render
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "space": {"bins": self.bins},
            "gibbs": _plain(self.gibbs),
            "render": {**_plain(r, skip=("region",)),
                       "region": [r.region.x0, r.region.y0, r.region.x1, r.region.y1]},
            "features": {"mode": self.feature_mode, "pool": self.pool},
            "train": {**_plain(self.train, skip=("seed",)), "hidden": list(self.train.hidden)},
            "loop": _plain(self.loop, skip=("seed", "generator", "train")),
            "target": _plain(self.target),
            "initial_prior": self.initial_prior,
            "generate": _plain(self.generate),
            "stats": _plain(self.stats),
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "ExperimentConfig":
        _reject_unknown("config", d, _TOP_KEYS)
        base = os.path.abspath(base_dir)
        space = d.get("space", {})
        _reject_unknown("space", space, ("bins",))
        bins = space.get("bins", 32)
        if isinstance(bins, dict):
            _reject_unknown("space.bins", bins, PARAMETER_NAMES)
            if any(int(b) < 2 for b in bins.values()):
                raise ConfigError("space.bins: need at least 2 bins per dimension")
        elif not isinstance(bins, int) or bins < 2:
            raise ConfigError("space.bins must be an integer >= 2 or a per-dimension object")

        def region(v):
            if not (isinstance(v, (list, tuple)) and len(v) == 4):
                raise ConfigError("render.region must be [x0, y0, x1, y1]")
            return Region(*map(float, v))

        render = _build(RenderConfig, "render", d.get("render"), region=region)
        feats = d.get("features", {})
        _reject_unknown("features", feats, ("mode", "pool"))
        train = _build(TrainConfig, "train", d.get("train"), skip=("seed",))
        loop = _build(LoopConfig, "loop", d.get("loop"), skip=("seed", "generator", "train"))
        target = _build(TargetSpec, "target", d.get("target"),
                        path=lambda p: _resolve(base, p))
        gen = _build(GenerateSpec, "generate", d.get("generate"),
                     prior=lambda p: _resolve(base, p))
        stats = _build(StatsSpec, "stats", d.get("stats"),
                       dataset_a=lambda p: _resolve(base, p),
                       dataset_b=lambda p: _resolve(base, p))
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        try:
            cfg = cls(seed=seed, output_dir=_resolve(base, d.get("output_dir")), bins=bins,
                      gibbs=_build(GibbsConfig, "gibbs", d.get("gibbs")), render=render,
                      feature_mode=feats.get("mode", "summary"), pool=int(feats.get("pool", 4)),
                      train=train, loop=loop, target=target,
                      initial_prior=_resolve(base, d.get("initial_prior")),
                      generate=gen, stats=stats)
            cfg.generator()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.target.q_tables(cfg.space())
        return cfg


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file.

    Raises FileNotFoundError for a missing file and ConfigError for invalid
    JSON or contents.
    """
    path = os.fspath(path)
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(doc, os.path.dirname(os.path.abspath(path)))


def load_prior(path) -> JointPrior:
    try:
        return JointPrior.load(path)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a valid prior file ({exc})") from exc
