import numpy as np
import pytest

from advtune import tuning
from advtune.discriminator import TrainConfig
from advtune.priors import (JointPrior, prior_from_tables, scene_space, table_kl,
                            uniform_prior)
from advtune.tuning import (GeneratorConfig, LoopConfig, features_matrix, generate, render_batch,
                            run, run_iteration, worker_count)

GEN = GeneratorConfig()
FAST = TrainConfig(epochs=30)


def target(prior, n, seed):
    _, imgs, _ = generate(prior, n, GEN, seed)
    return features_matrix(imgs, GEN)


def bump(space, name, mu, width=0.08):
    tabs = []
    for d in space.dims:
        t = np.ones(d.bins)
        if d.name == name:
            t = np.exp(-(d.centers() - mu) ** 2 / (2 * width ** 2))
        tabs.append(t)
    return prior_from_tables(space, tabs)


def test_loop_config_validation():
    with pytest.raises(ValueError):
        LoopConfig(n_v=5)
    with pytest.raises(ValueError):
        LoopConfig(max_iterations=101)
    with pytest.raises(ValueError):
        LoopConfig(likelihood_mode="other")
    with pytest.raises(ValueError):
        LoopConfig(bandwidth=0)
    assert LoopConfig().likelihood_mode == "ratio"


def test_smoke_two_bins():
    space = scene_space(2)
    prior = uniform_prior(space)
    T = target(prior, 20, 1)
    cfg = LoopConfig(n_v=10, max_iterations=1, train=FAST, convergence_epsilon=-1.0)
    new, rec, conv = run_iteration(prior, T, cfg, 0)
    assert not conv and rec.updated
    assert len(new.tables) == 16
    for t in new.tables:
        assert t.values.shape == (2,) and t.values.max() == 1.0 and t.values.min() >= 0
    assert new.iteration == 1
    assert 0.0 <= rec.heldout_accuracy <= 1.0


def test_zero_iterations():
    rep = run(LoopConfig(max_iterations=0), np.zeros((3, 37)))
    assert rep.records == [] and rep.final_prior == uniform_prior(scene_space())
    assert rep.stop_reason == "max_iterations"


def test_run_deterministic_and_thread_independent(monkeypatch):
    space = scene_space()
    T = target(bump(space, "light_intensity", 0.8), 120, 3)
    cfg = LoopConfig(n_v=60, max_iterations=2, train=FAST, convergence_epsilon=-1.0, seed=4)
    a = run(cfg, T).dumps()
    monkeypatch.setenv("ADVTUNE_THREADS", "3")
    assert worker_count() == 3
    b = run(cfg, T).dumps()
    assert a == b


def test_render_batch_thread_invariant(monkeypatch):
    thetas = tuning.sample_vectors(uniform_prior(scene_space()), 8, 0)
    seeds = np.random.SeedSequence(9).spawn(8)
    f1, l1 = render_batch(thetas, seeds, GEN)
    monkeypatch.setenv("ADVTUNE_THREADS", "4")
    f4, l4 = render_batch(thetas, np.random.SeedSequence(9).spawn(8), GEN)
    for a, b in zip(f1, f4):
        np.testing.assert_array_equal(a.intensity, b.intensity)


def test_worker_count_parsing(monkeypatch):
    monkeypatch.setenv("ADVTUNE_THREADS", "junk")
    assert worker_count() == 1
    monkeypatch.setenv("ADVTUNE_THREADS", "0")
    assert worker_count() == 1


def test_converged_iteration_leaves_prior(monkeypatch):
    prior = uniform_prior(scene_space())
    T = target(prior, 100, 5)
    cfg = LoopConfig(n_v=50, train=FAST, convergence_epsilon=0.5)
    new, rec, conv = run_iteration(prior, T, cfg, 0)
    assert conv and new is prior and not rec.updated


def test_degenerate_stops(monkeypatch):
    space = scene_space()
    monkeypatch.setattr(tuning, "likelihood_tables",
                        lambda thetas, scores, sp, h, mode: [np.zeros(d.bins) for d in sp.dims])
    prior = uniform_prior(space)
    rep = run(LoopConfig(n_v=20, max_iterations=3, train=FAST, convergence_epsilon=-1.0),
              target(prior, 30, 0))
    assert rep.stop_reason == "degenerate" and rep.records == []
    assert rep.final_prior is rep.initial_prior


def test_light_target_moves_mass_up():
    space = scene_space()
    q = bump(space, "light_intensity", 5.0 / 6.0)
    T = target(q, 600, 11)
    prior = uniform_prior(space)
    cfg = LoopConfig(n_v=300, train=TrainConfig(epochs=150), convergence_epsilon=-1.0)
    new, rec, _ = run_iteration(prior, T, cfg, 2)

    def upper_mass(p):
        v = p.tables[0].values
        return v[16:].sum() / v.sum()

    assert upper_mass(new) > upper_mass(prior)
    assert rec.kl_to_target is None


def test_report_json_shape():
    space = scene_space()
    q = bump(space, "camera_height", 0.3)
    qt = {"camera_height": q.table("camera_height").values}
    T = target(q, 80, 2)
    rep = run(LoopConfig(n_v=40, max_iterations=2, train=FAST, convergence_epsilon=-1.0), T,
              target_tables=qt, config_echo={"x": 1})
    d = rep.to_json()
    assert d["stop_reason"] == "max_iterations" and d["iterations"] == 2
    assert "wall_clock" not in d["records"][0]
    assert "wall_clock" in rep.to_json(include_timing=True)["records"][0]
    assert len(rep.kl_trajectory("camera_height")) == 3
    assert rep.kl_trajectory("camera_height")[0] == pytest.approx(
        table_kl(np.ones(32), qt["camera_height"]))
    JointPrior.from_json(d["final_prior"])


@pytest.mark.slow
def test_target_from_current_prior():
    space = scene_space()
    accs = []
    for s in range(5):
        prior = uniform_prior(space)
        T = target(prior, 1000, 50 + s)
        cfg = LoopConfig(n_v=500, convergence_epsilon=-1.0)
        new, rec, _ = run_iteration(prior, T, cfg, s)
        point = np.zeros(32)
        point[0] = 1.0
        for d in range(len(space)):
            assert table_kl(new.tables[d].values, prior.tables[d].values) < \
                table_kl(prior.tables[d].values, point)
        accs.append(rec.heldout_accuracy)
    assert 0.45 <= np.mean(accs) <= 0.6
