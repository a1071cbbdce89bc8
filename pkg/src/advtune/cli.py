"""Command-line front end: ``advtune {tune,generate,stats}``.

Every artifact goes under the output directory (``--out`` or the
config's ``output_dir``). On failure a JSON error record is printed to
stderr and, when an output directory is known, written to ``error.json``.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback

import numpy as np

from . import formats
from .config import ExperimentConfig, load_config, load_prior
from .errors import (AdvTuneError, BinningMismatch, ConfigError, DegenerateTable,
                     EmptyDataset, NonFiniteLoss, RetryExhausted)
from .stats import (class_pixel_proportions, histogram_kl, intensity_histogram,
                    write_histogram_csv, write_proportions_csv)
from .tuning import TuningReport, features_matrix, generate, run

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BINNING = 4
EXIT_LOOP = 5

# spawn keys for streams that sit beside the loop's per-iteration streams
_TARGET_KEY = 1000
_GENERATE_KEY = 2000


class CliFailure(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra


def _stream(seed: int, key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(key,))


def _out_dir(cfg: ExperimentConfig) -> str:
    if not cfg.output_dir:
        raise CliFailure(EXIT_CONFIG, "ConfigError",
                         "no output directory: pass --out or set output_dir in the config")
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


# -- tune ---------------------------------------------------------------------

def target_features(cfg: ExperimentConfig):
    """Return ``(features matrix, known target tables or None)``."""
    gen = cfg.generator()
    if cfg.target.source == "synthetic":
        space = cfg.space()
        _, imgs, _ = generate(cfg.target.q_prior(space), cfg.target.count, gen,
                              _stream(cfg.seed, _TARGET_KEY))
        return features_matrix(imgs, gen), cfg.target.q_tables(space)
    ds = formats.load_dataset(cfg.target.path)
    if len(ds) == 0:
        raise EmptyDataset(f"{cfg.target.path}: target dataset is empty")
    for img in ds.features:
        if img.intensity.shape != (cfg.render.height, cfg.render.width):
            raise ConfigError(f"{cfg.target.path}: target images are "
                              f"{img.intensity.shape}, render grid is "
                              f"{(cfg.render.height, cfg.render.width)}")
    return features_matrix(ds.features, gen), None


def write_tuning_outputs(out: str, report: TuningReport) -> None:
    _write_json(os.path.join(out, "report.json"), report.to_json(include_timing=False))
    report.final_prior.save(os.path.join(out, "final_prior.json"))
    names = report.space.names
    kl_names = sorted(report.initial_kl) if report.initial_kl else []
    with open(os.path.join(out, "iterations.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "heldout_accuracy", "train_accuracy", "final_loss",
                    "epochs_run", "mean_score", "updated", *(f"kl_{n}" for n in kl_names)])
        for r in report.records:
            w.writerow([r.iteration, repr(r.heldout_accuracy), repr(r.train_accuracy),
                        repr(r.final_loss), r.epochs_run, repr(r.mean_score), int(r.updated),
                        *(repr(r.kl_to_target[n]) for n in kl_names)])
    # long format: one row per (iteration, dimension, bin); iteration -1 is the start
    with open(os.path.join(out, "priors.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "dimension", "bin", "prior", "likelihood"])
        for d, t in zip(names, report.initial_prior.tables):
            for b, v in enumerate(t.values):
                w.writerow([-1, d, b, repr(float(v)), ""])
        for r in report.records:
            for d, pt, lt in zip(names, r.prior_tables, r.likelihood):
                for b, (pv, lv) in enumerate(zip(pt, lt)):
                    w.writerow([r.iteration, d, b, repr(pv), repr(lv)])
    with open(os.path.join(out, "timing.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "wall_clock_seconds"])
        for r in report.records:
            w.writerow([r.iteration, f"{r.wall_clock:.3f}"])


def cmd_tune(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    _write_json(os.path.join(out, "config.json"), cfg.to_dict())
    feats, q_tables = target_features(cfg)
    # the report echoes everything except the output location, so the same
    # experiment written to two directories gives byte-identical reports
    echo = {k: v for k, v in cfg.to_dict().items() if k != "output_dir"}
    report = run(cfg.loop_config(), feats, cfg.start_prior(), q_tables, config_echo=echo)
    write_tuning_outputs(out, report)
    summary = {"stop_reason": report.stop_reason, "iterations": len(report.records),
               "heldout_accuracy": report.accuracies()}
    if q_tables:
        last = report.records[-1].kl_to_target if report.records else report.initial_kl
        summary["kl_initial"] = report.initial_kl
        summary["kl_final"] = last
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# -- generate -----------------------------------------------------------------

def cmd_generate(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    prior = load_prior(cfg.generate.prior) if cfg.generate.prior else cfg.start_prior()
    if not prior.space.is_scene_space:
        raise ConfigError("generate: prior does not cover the scene parameters in order")
    n = cfg.generate.count
    thetas, feats, labels = generate(prior, n, cfg.generator(), _stream(cfg.seed, _GENERATE_KEY))
    formats.write_dataset(out, feats, labels, thetas if n else None)
    print(json.dumps({"count": n, "manifest": os.path.join(out, "manifest.csv")}))
    return EXIT_OK


# -- stats --------------------------------------------------------------------

def cmd_stats(cfg: ExperimentConfig, dataset_a=None, dataset_b=None) -> int:
    a = dataset_a or cfg.stats.dataset_a
    b = dataset_b or cfg.stats.dataset_b
    if not a or not b:
        raise ConfigError("stats needs two dataset directories (config stats.dataset_a/"
                          "dataset_b or positional arguments)")
    out = _out_dir(cfg)
    ds_a, ds_b = formats.load_dataset(a), formats.load_dataset(b)
    h_a = intensity_histogram(ds_a.features, cfg.stats.bins)
    h_b = intensity_histogram(ds_b.features, cfg.stats.bins_b or cfg.stats.bins)
    kl_ab, kl_ba = histogram_kl(h_a, h_b), histogram_kl(h_b, h_a)
    write_histogram_csv(os.path.join(out, "histogram_a.csv"), h_a)
    write_histogram_csv(os.path.join(out, "histogram_b.csv"), h_b)
    with open(os.path.join(out, "kl.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["direction", "kl"])
        w.writerow(["a||b", repr(kl_ab)])
        w.writerow(["b||a", repr(kl_ba)])
    props = {}
    for tag, ds in (("a", ds_a), ("b", ds_b)):
        if ds.labels is not None:
            props[tag] = class_pixel_proportions(ds.labels)
    if props:
        write_proportions_csv(os.path.join(out, "proportions.csv"), props)
    print(json.dumps({"kl_a_b": kl_ab, "kl_b_a": kl_ba}))
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def _classify(exc: BaseException) -> tuple[int, str]:
    if isinstance(exc, CliFailure):
        return exc.code, exc.kind
    if isinstance(exc, BinningMismatch):
        return EXIT_BINNING, "BinningMismatch"
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG, "ConfigError"
    if isinstance(exc, (DegenerateTable, NonFiniteLoss, RetryExhausted, EmptyDataset)):
        return EXIT_LOOP, type(exc).__name__
    if isinstance(exc, OSError):
        return EXIT_IO, "IoError"
    if isinstance(exc, AdvTuneError):
        return EXIT_INTERNAL, type(exc).__name__
    return EXIT_INTERNAL, type(exc).__name__


def _report_error(exc: BaseException, command: str, out_dir: str | None) -> int:
    code, kind = _classify(exc)
    record = {"status": "error", "command": command, "error": kind, "message": str(exc),
              "exit_code": code}
    path = getattr(exc, "filename", None)
    if path:
        record["path"] = os.fspath(path)
    if isinstance(exc, CliFailure):
        record.update(exc.extra)
    if code == EXIT_INTERNAL:
        record["traceback"] = traceback.format_exception_only(type(exc), exc)[-1].strip()
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    if out_dir:
        try:
            os.makedirs(out_dir, exist_ok=True)
            _write_json(os.path.join(out_dir, "error.json"), record)
        except OSError:
            pass
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="advtune",
                                description="Adversarial tuning of scene generator priors.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, metavar="PATH",
                        help="experiment JSON, or 'quickstart' for the bundled example")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, metavar="N", help="master seed (overrides config)")

    common(sub.add_parser("tune", help="run the tuning loop"))
    g = sub.add_parser("generate", help="sample and render a dataset from a prior")
    common(g)
    g.add_argument("--count", type=int, metavar="N", help="number of scenes")
    s = sub.add_parser("stats", help="compare two datasets")
    common(s)
    s.add_argument("datasets", nargs="*", metavar="DIR",
                   help="dataset A and dataset B (override the config)")
    return p


def bundled_config(name: str) -> str:
    """Path of a config shipped with the package (``quickstart``)."""
    from importlib.resources import files
    return str(files("advtune") / "data" / f"{name}.json")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = os.path.abspath(args.out) if args.out else None
    try:
        path = args.config
        if path == "quickstart" and not os.path.exists(path):
            path = bundled_config("quickstart")
        cfg = load_config(path)
        cfg = cfg.with_overrides(seed=args.seed, output_dir=out_dir,
                                 count=getattr(args, "count", None))
        out_dir = cfg.output_dir
        if args.command == "tune":
            return cmd_tune(cfg)
        if args.command == "generate":
            return cmd_generate(cfg)
        if len(args.datasets) not in (0, 2):
            raise ConfigError("stats takes exactly two dataset directories")
        return cmd_stats(cfg, *args.datasets)
    except Exception as exc:  # every failure becomes an error record + exit code
        return _report_error(exc, args.command, out_dir)


if __name__ == "__main__":
    sys.exit(main())
