"""Command-line driver.

    ltidetect <command> [--config FILE] [--<key> VALUE ...] [command flags]

Every :class:`~ltidetect.pipeline.PipelineConfig` key can be set in a flat
``key = value`` config file and overridden by a same-named flag. Artifacts go
to ``--out`` (default ``runs/default``)::

    profile.json  normalization.json  model.json  model_noseasonal.json
    metrics.json  params.json  scores.csv  diagnostics.jsonl  roc.csv  bench.json

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from . import pipeline as pl
from .core import LabelTrack, load_labels, write_csv, write_labels
from .decomp import SeasonalProfile
from .errors import ConfigError, DataError, LTIError
from .evaluation import roc_auc, save_bench
from .forecast import ForecastModel
from .score import ScoreStream, ScoringParams

log = logging.getLogger("ltidetect")

MODEL_FILES = {True: "model.json", False: "model_noseasonal.json"}
METRIC_KEYS = {True: "gru+st", False: "gru"}


def _config(args) -> pl.PipelineConfig:
    base = {}
    if getattr(args, "preset", None):
        base.update(dataset=args.preset, out=f"runs/{args.preset}")
    if args.config:
        base.update(pl.read_config_file(args.config))
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(pl.PipelineConfig)}
    return pl.make_config(base, **overrides)


def _need(path: Path) -> Path:
    if not path.exists():
        raise DataError(f"no such file: {path}")
    return path


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _model_path(args, cfg) -> Path:
    return Path(args.model) if args.model else cfg.out_dir / MODEL_FILES[cfg.seasonal]


def _prepared(cfg):
    prep = pl.prepare(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return prep


# ------------------------------------------------------------------ commands


def cmd_decompose(args) -> int:
    cfg = _config(args)
    prep = _prepared(cfg)
    t0 = time.perf_counter()
    profile = pl.run_decompose(cfg, prep)
    dt = time.perf_counter() - t0
    profile.save(cfg.out_dir / "profile.json")
    _write_json(cfg.out_dir / "normalization.json", prep.norm.to_dict())
    print(f"decomposition of {len(prep.train)} frames x {prep.series.m} channels: {dt:.3f} s")
    print(f"wrote {cfg.out_dir / 'profile.json'}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    prep = _prepared(cfg)
    profile = None
    if cfg.seasonal:
        profile = SeasonalProfile.load(_need(cfg.out_dir / "profile.json"))
    model, metrics = pl.run_train(cfg, prep, profile)
    path = _model_path(args, cfg)
    model.save(path)
    mpath = cfg.out_dir / "metrics.json"
    allm = json.loads(mpath.read_text()) if mpath.exists() else {}
    allm[METRIC_KEYS[cfg.seasonal]] = metrics
    if "gru+st" in allm and "gru" in allm:
        allm["seasonal_improvement"] = 1.0 - allm["gru+st"]["test_mse"] / allm["gru"]["test_mse"]
    _write_json(mpath, allm)
    print(f"{metrics['topology']}: test MSE {metrics['test_mse']:.6g} after {metrics['epochs']} epochs "
          f"({metrics['wall_time_s']:.1f} s)")
    print(f"wrote {path}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    prep = _prepared(cfg)
    model = ForecastModel.load(_model_path(args, cfg))
    params, report = pl.run_calibrate(cfg, prep, model)
    doc = params.to_dict()
    doc["converged"] = report.converged
    doc["trace"] = [list(p) for p in report.trace]
    _write_json(cfg.out_dir / "params.json", doc)
    print(f"k = {params.k:.6g}, x0 = {params.x0:.6g} after {report.iterations} iterations"
          f"{'' if report.converged else ' (not converged)'}")
    return 0


def cmd_detect(args) -> int:
    cfg = _config(args)
    prep = _prepared(cfg)
    model = ForecastModel.load(_model_path(args, cfg))
    params = ScoringParams.load(Path(args.params) if args.params else cfg.out_dir / "params.json")
    scores = pl.run_detect(cfg, prep, model, params)
    out = cfg.out_dir / "scores.csv"
    scores.to_csv(out)
    if args.diagnostics:
        scores.diagnostics_jsonl(cfg.out_dir / "diagnostics.jsonl")
    print(f"scored {len(scores)} frames; wrote {out}")
    if args.threshold is not None:
        hits = [r for r in scores.records if r.score >= args.threshold]
        print(f"{len(hits)} frames with AS >= {args.threshold}")
        for r in hits:
            print(f"  t={r.t} AS={r.score:.4f}")
    return 0


def _labels(cfg, args) -> LabelTrack:
    if cfg.labels:
        return load_labels(_need(Path(cfg.labels)), cfg.utc_offset)
    if cfg.dataset == "csv":
        raise ConfigError("evaluate needs --labels")
    labels = pl.load_dataset(cfg)[1]
    if labels is None:
        raise ConfigError("dataset has no labels")
    return labels


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    spath = _need(Path(args.scores) if args.scores else cfg.out_dir / "scores.csv")
    scores = ScoreStream.from_csv(spath, cfg.utc_offset)
    roc = roc_auc(scores, _labels(cfg, args))
    roc.to_csv(spath.with_name("roc.csv"))
    print(f"AUC = {roc.auc:.6f}")
    if args.bench:
        prep = _prepared(cfg)
        model = ForecastModel.load(_model_path(args, cfg))
        params = ScoringParams.load(cfg.out_dir / "params.json")
        reports = pl.run_bench(cfg, prep, model, params, L_values=(cfg.L,), lanes=cfg.lanes)
        save_bench(reports, cfg.out_dir / "bench.json")
        for r in reports:
            print(f"L={r.L} lanes={r.lanes}: {r.mean_ms:.3f} ms/frame")
    return 0


def cmd_generate(args) -> int:
    cfg = _config(args)
    if cfg.dataset not in ("synthetic2", "synthetic5"):
        cfg = dataclasses.replace(cfg, dataset="synthetic5")
    series, labels = pl.load_dataset(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(series, cfg.out_dir / "series.csv")
    write_labels(labels, cfg.out_dir / "labels.csv")
    print(f"{len(series)} frames x {series.m} channels, {labels.labels.mean():.1%} anomalous; "
          f"wrote {cfg.out_dir}/series.csv, labels.csv")
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    prep = _prepared(cfg)
    mp = _model_path(args, cfg)
    if mp.exists():
        model = ForecastModel.load(mp)
    else:
        # overhead does not depend on trained weights
        profile = pl.run_decompose(cfg, prep)
        model = ForecastModel.init(pl.NetworkTopology(prep.series.m, cfg.L, cfg.hidden, cfg.depth,
                                                      cfg.seasonal), cfg.seed, profile)
    ppath = cfg.out_dir / "params.json"
    params = ScoringParams.load(ppath) if ppath.exists() else ScoringParams(1.0, 0.5, cfg.c)
    Ls = tuple(int(v) for v in args.L_values.split(","))
    reports = pl.run_bench(cfg, prep, model, params, L_values=Ls, lanes=cfg.lanes, repeats=args.repeats)
    save_bench(reports, cfg.out_dir / "bench.json")
    for r in reports:
        print(f"L={r.L:3d} lanes={r.lanes}: mean {r.mean_ms:.3f} ms, p50 {r.p50_ms:.3f}, "
              f"p99 {r.p99_ms:.3f} (scores {r.scores_digest})")
    return 0


def cmd_repro(args) -> int:
    cfg = _config(args)
    res = pl.repro(cfg)
    print(f"{cfg.dataset}: test MSE {res.metrics['test_mse']:.6g}, k = {res.params.k:.6g}, "
          f"x0 = {res.params.x0:.6g}, {len(res.scores)} scored frames")
    if res.roc is not None:
        print(f"AUC = {res.roc.auc:.6f}")
    print(f"wrote {cfg.out_dir}")
    return 0


# ---------------------------------------------------------------- argparse


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    g = p.add_argument_group("config overrides")
    for f in dataclasses.fields(pl.PipelineConfig):
        g.add_argument(f"--{f.name}", default=None, metavar=str(f.type).upper(),
                       help=f"(default {f.default})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ltidetect", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _add_config_flags(p)
        p.set_defaults(fn=fn)
        return p

    add("decompose", cmd_decompose, "fit seasonal lookup tables on the training split")
    p = add("train", cmd_train, "train the forecaster (--seasonal on|off for the ablation)")
    p.add_argument("--model", help="checkpoint path")
    p = add("calibrate", cmd_calibrate, "fit logistic (k, x0) on the validation split")
    p.add_argument("--model")
    p = add("detect", cmd_detect, "score the test split")
    p.add_argument("--model")
    p.add_argument("--params")
    p.add_argument("--diagnostics", action="store_true", help="write per-frame JSON lines")
    p.add_argument("--threshold", type=float, help="list frames with AS above this value")
    p = add("evaluate", cmd_evaluate, "ROC/AUC of a score CSV against labels")
    p.add_argument("--scores")
    p.add_argument("--model")
    p.add_argument("--bench", action="store_true", help="also time detection, write bench.json")
    add("generate", cmd_generate, "write a synthetic multi-seasonal dataset")
    p = add("bench", cmd_bench, "per-frame detection overhead across L")
    p.add_argument("--model")
    p.add_argument("--L-values", dest="L_values", default="5,10,20,30")
    p.add_argument("--repeats", type=int, default=3)
    p = add("repro", cmd_repro, "run every stage for a dataset preset")
    p.add_argument("preset", choices=sorted(pl.PRESETS))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except LTIError as e:
        print(f"ltidetect {args.command}: error: {e}", file=sys.stderr)
        return e.exit_code
    except FileNotFoundError as e:
        print(f"ltidetect {args.command}: error: no such file: {e.filename}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
