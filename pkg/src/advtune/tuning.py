"""Adversarial tuning loop.

One iteration: draw parameter vectors from the prior, sample layouts and
render them, train a fresh discriminator on target-vs-generated features
(80/20 train/held-out split), score every generated sample, turn the
scores into per-dimension likelihood tables by weighted KDE, and multiply
them into the prior.
"""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import discriminator as disc
from .errors import DegenerateTable
from .kde import DEFAULT_BANDWIDTH, LIKELIHOOD_MODES, likelihood_tables
from .priors import (JointPrior, ParameterSpace, bayes_update, sample_vectors, scene_space,
                     table_kl, total_variation, uniform_prior)
from .renderer import FEATURE_MODES, RenderConfig, extract_features, render_pair
from .scene_model import GibbsConfig, SceneParameters, sample_layout

STOP_REASONS = ("max_iterations", "converged", "degenerate")

def worker_count() -> int:
    """Worker threads for rendering, capped by ``ADVTUNE_THREADS`` (default 1)."""
    try:
        n = int(os.environ.get("ADVTUNE_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


@dataclass(frozen=True)
class GeneratorConfig:
    render: RenderConfig = field(default_factory=RenderConfig)
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    feature_mode: str = "summary"
    pool: int = 4

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")


@dataclass(frozen=True)
class LoopConfig:
    n_v: int = 1000
    max_iterations: int = 6
    convergence_epsilon: float = 0.05
    holdout_fraction: float = 0.2
    bandwidth: float | str = DEFAULT_BANDWIDTH
    likelihood_mode: str = "ratio"
    seed: int = 0
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    train: disc.TrainConfig = field(default_factory=disc.TrainConfig)

    def __post_init__(self):
        if self.n_v < 10:
            raise ValueError("n_v must be >= 10")
        if not 0 <= self.max_iterations <= 100:
            raise ValueError("max_iterations must be in [0, 100]")
        if not 0 < self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must be in (0, 1)")
        if self.likelihood_mode not in LIKELIHOOD_MODES:
            raise ValueError(f"likelihood_mode must be one of {LIKELIHOOD_MODES}")
        if not (self.bandwidth == "silverman" or float(self.bandwidth) > 0):
            raise ValueError("bandwidth must be positive or 'silverman'")


# -- generation ---------------------------------------------------------------

def _render_one(args):
    vec, seed, gen = args
    theta = SceneParameters.from_vector(vec)
    layout = sample_layout(theta, gen.render.region, gen.gibbs, np.random.default_rng(seed))
    return render_pair(theta, layout, gen.render)


def render_batch(thetas: np.ndarray, seeds, gen: GeneratorConfig = GeneratorConfig()):
    """Render one sample per parameter vector; returns ``(features, labels)``.

    ``seeds`` supplies one layout seed per sample so results do not depend
    on the number of worker threads.
    """
    jobs = [(v, s, gen) for v, s in zip(thetas, seeds)]
    n_workers = worker_count()
    if n_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(n_workers) as ex:
            pairs = list(ex.map(_render_one, jobs))
    else:
        pairs = [_render_one(j) for j in jobs]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def generate(prior: JointPrior, n: int, gen: GeneratorConfig, seed) -> tuple:
    """Sample ``n`` scenes from ``prior``: ``(thetas, features, labels)``."""
    if not prior.space.is_scene_space:
        raise ValueError("prior space must list the SceneParameters dimensions in order")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_theta, s_layout = ss.spawn(2)
    thetas = sample_vectors(prior, n, np.random.default_rng(s_theta))
    feats, labels = render_batch(thetas, s_layout.spawn(n), gen)
    return thetas, feats, labels


def features_matrix(images, gen: GeneratorConfig) -> np.ndarray:
    rows = [extract_features(img, gen.feature_mode, gen.pool) for img in images]
    return np.stack(rows) if rows else np.zeros((0, 0))


# -- report -------------------------------------------------------------------

@dataclass
class IterationRecord:
    iteration: int
    heldout_accuracy: float
    train_accuracy: float
    final_loss: float
    epochs_run: int
    mean_score: float
    updated: bool
    likelihood: list[list[float]]
    prior_tables: list[list[float]]
    kl_to_target: dict[str, float] | None = None
    wall_clock: float = 0.0

    def to_json(self, include_timing: bool = False) -> dict:
        d = asdict(self)
        if not include_timing:
            d.pop("wall_clock")
        return d


@dataclass
class TuningReport:
    space: ParameterSpace
    initial_prior: JointPrior
    final_prior: JointPrior
    records: list[IterationRecord] = field(default_factory=list)
    stop_reason: str = "max_iterations"
    initial_kl: dict[str, float] | None = None
    config: dict | None = None

    def to_json(self, include_timing: bool = False) -> dict:
        return {
            "format": "advtune-report/1",
            "config": self.config,
            "stop_reason": self.stop_reason,
            "iterations": len(self.records),
            "initial_kl": self.initial_kl,
            "initial_prior": self.initial_prior.to_json(),
            "final_prior": self.final_prior.to_json(),
            "records": [r.to_json(include_timing) for r in self.records],
        }

    def dumps(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_json(include_timing), indent=1, sort_keys=True)

    def accuracies(self) -> list[float]:
        return [r.heldout_accuracy for r in self.records]

    def kl_trajectory(self, name: str) -> list[float]:
        """KL(P_i, Q) for i = 0 (initial prior) through the last update."""
        if self.initial_kl is None:
            raise ValueError("run had no target tables")
        out = [self.initial_kl[name]]
        out += [r.kl_to_target[name] for r in self.records if r.updated]
        return out


def kl_to_target(prior: JointPrior, target_tables: dict[str, np.ndarray]) -> dict[str, float]:
    return {name: table_kl(prior.table(name), q) for name, q in target_tables.items()}


def tv_from_uniform(prior: JointPrior) -> dict[str, float]:
    return {d.name: total_variation(t.values, np.ones(d.bins))
            for d, t in zip(prior.space.dims, prior.tables)}


# -- loop ---------------------------------------------------------------------

def _split(n: int, frac: float, rng) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n)
    n_hold = max(1, int(round(frac * n)))
    return perm[n_hold:], perm[:n_hold]


def run_iteration(prior: JointPrior, target_features: np.ndarray, cfg: LoopConfig,
                  seed, target_tables: dict | None = None, iteration: int | None = None):
    """One tuning step. Returns ``(new_prior, record, converged)``.

    The prior is updated only when the held-out accuracy exceeds
    ``0.5 + convergence_epsilon``; otherwise ``new_prior is prior``.

    Raises
    ------
    DegenerateTable
        If every likelihood table entry of some dimension is zero.
    """
    t0 = time.perf_counter()
    target_features = np.asarray(target_features, dtype=np.float64)
    if target_features.ndim != 2 or len(target_features) == 0:
        raise ValueError("target_features must be a nonempty 2-D array")
    it = prior.iteration if iteration is None else iteration
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_gen, s_split, s_init, s_sgd, s_target = ss.spawn(5)
    gen = cfg.generator

    thetas, imgs, _ = generate(prior, cfg.n_v, gen, s_gen)
    fake = features_matrix(imgs, gen)

    split_rng = np.random.default_rng(s_split)
    n_real = min(cfg.n_v, len(target_features))
    pick = np.random.default_rng(s_target).choice(len(target_features), n_real, replace=False)
    real = target_features[np.sort(pick)]
    r_tr, r_ho = _split(len(real), cfg.holdout_fraction, split_rng)
    f_tr, f_ho = _split(len(fake), cfg.holdout_fraction, split_rng)

    seed_init = int(s_init.generate_state(1)[0])
    seed_sgd = int(s_sgd.generate_state(1)[0])
    model = disc.init_model(fake.shape[1], seed_init, cfg.train.hidden)
    result = disc.train(model, real[r_tr], fake[f_tr], replace(cfg.train, seed=seed_sgd))
    model = result.model

    X_ho = np.concatenate([real[r_ho], fake[f_ho]])
    y_ho = np.concatenate([np.ones(len(r_ho)), np.zeros(len(f_ho))])
    X_tr = np.concatenate([real[r_tr], fake[f_tr]])
    y_tr = np.concatenate([np.ones(len(r_tr)), np.zeros(len(f_tr))])
    acc_ho = disc.accuracy(model, X_ho, y_ho)
    acc_tr = disc.accuracy(model, X_tr, y_tr)

    scores = disc.score_batch(model, fake)
    tables = likelihood_tables(thetas, scores, prior.space, cfg.bandwidth, cfg.likelihood_mode)

    converged = acc_ho <= 0.5 + cfg.convergence_epsilon
    if converged:
        new_prior = prior
    else:
        new_prior = bayes_update(prior, tables)

    record = IterationRecord(
        iteration=it,
        heldout_accuracy=acc_ho,
        train_accuracy=acc_tr,
        final_loss=float(result.history[-1]),
        epochs_run=len(result.history),
        mean_score=float(scores.mean()),
        updated=not converged,
        likelihood=[t.tolist() for t in tables],
        prior_tables=[t.values.tolist() for t in new_prior.tables],
        kl_to_target=kl_to_target(new_prior, target_tables) if target_tables else None,
        wall_clock=time.perf_counter() - t0,
    )
    return new_prior, record, converged


def run(cfg: LoopConfig, target_features, prior: JointPrior | None = None,
        target_tables: dict | None = None, config_echo: dict | None = None) -> TuningReport:
    """Iterate `run_iteration` until convergence, degeneracy or the cap.

    ``target_tables`` maps dimension names to known target tables; when
    given, KL(P, Q) is recorded per iteration.
    """
    prior = prior if prior is not None else uniform_prior(scene_space())
    initial = prior
    report = TuningReport(prior.space, initial, prior, config=config_echo,
                          initial_kl=kl_to_target(prior, target_tables) if target_tables else None)
    root = np.random.SeedSequence(cfg.seed)
    iter_seeds = root.spawn(max(cfg.max_iterations, 1))
    for i in range(cfg.max_iterations):
        try:
            prior, rec, converged = run_iteration(prior, target_features, cfg, iter_seeds[i],
                                                  target_tables, iteration=i)
        except DegenerateTable:
            report.stop_reason = "degenerate"
            break
        report.records.append(rec)
        if converged:
            report.stop_reason = "converged"
            break
    else:
        report.stop_reason = "max_iterations"
    report.final_prior = prior
    return report
