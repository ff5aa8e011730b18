"""End-to-end stages: prepare -> decompose -> train -> calibrate -> detect -> evaluate.

Every stage is a pure function of a :class:`PipelineConfig` (plus the artifacts
written by earlier stages), so reruns with the same config are byte-identical.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import datasets
from .core import (HOUR, LabelTrack, NormalizationParams, TimeSeries, aggregate_to_interval,
                   concat, fit_normalization, load_csv, load_labels, normalize, split)
from .decomp import DecompositionConfig, SeasonalProfile, fit_decomposition
from .errors import ConfigError, DataError
from .evaluation import (BenchReport, RocCurve, SyntheticSpec, bench_detection, generate_synthetic,
                         random_injections, roc_auc)
from .forecast import ForecastModel, NetworkTopology, TrainingConfig, evaluate_mse, train
from .score import CalibrationReport, Detector, ScoreStream, ScoringParams, calibrate

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    # data
    dataset: str = "csv"            # csv | calit2 | dodgers | synthetic2 | synthetic5
    data: str = ""                  # series CSV (dataset = csv)
    labels: str = ""                # label CSV (dataset = csv)
    data_dir: str = ""              # directory holding the raw UCI files
    interval: int = HOUR            # aggregation target in seconds
    reducer: str = "sum"
    fill_gaps: bool = False
    utc_offset: int = 0
    train_len: int = 1600
    val_len: int = 300
    test_len: int = 500
    # decomposition
    daily_order: int = 4
    weekly_order: int = 3
    trend: str = "linear"
    # forecaster
    L: int = 5
    hidden: int = 20
    depth: int = 2
    seasonal: bool = True
    time_steps: int = 72
    max_epochs: int = 200
    patience: int = 10              # 0 disables early stopping
    learning_rate: float = 1e-3
    weight_decay: float = 6e-6
    seed: int = 0
    # scoring
    c: float = 1.0
    max_iterations: int = 100
    method: str = "matrix"          # matrix | scalar
    lanes: int = 1
    # synthetic generator
    synth_length: int = 2200
    synth_contamination: float = 0.12
    synth_magnitude: float = 0.0    # 0 = 6 x noise_std
    synth_noise: float = 0.1
    synth_seed: int = 7
    # output
    out: str = "runs/default"

    def validate(self) -> "PipelineConfig":
        if self.L < 1:
            raise ConfigError("L must be >= 1")
        if self.time_steps < 1:
            raise ConfigError("time_steps must be >= 1")
        if self.method not in ("matrix", "scalar"):
            raise ConfigError(f"method must be matrix or scalar, got {self.method!r}")
        if self.lanes < 1:
            raise ConfigError("lanes must be >= 1")
        if self.dataset not in ("csv", "calit2", "dodgers", "synthetic2", "synthetic5"):
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if min(self.train_len, self.val_len, self.test_len) < 0:
            raise ConfigError("split lengths must be non-negative")
        return self

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def decomposition(self) -> DecompositionConfig:
        return DecompositionConfig(self.daily_order, self.weekly_order, self.trend)

    def training(self) -> TrainingConfig:
        return TrainingConfig(self.learning_rate, self.weight_decay, self.time_steps,
                              self.max_epochs, self.patience or None, self.seed)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))


def _coerce(f: dataclasses.Field, raw):
    if isinstance(raw, str):
        raw = raw.strip()
    typ = f.type if isinstance(f.type, str) else f.type.__name__
    try:
        if typ == "bool":
            if isinstance(raw, bool):
                return raw
            low = str(raw).lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(f"config key {f.name!r}: cannot parse {raw!r} as {typ}") from None


PRESETS = {
    # validation is carved from the end of the training span so the test windows stay
    # at CalIt2 frames 1900..2399 and Dodgers frames 3000..3999
    "calit2": dict(dataset="calit2", train_len=1600, val_len=300, test_len=500, depth=2),
    "dodgers": dict(dataset="dodgers", train_len=2500, val_len=500, test_len=1000, depth=2),
    "synthetic5": dict(dataset="synthetic5", train_len=1400, val_len=300, test_len=500, depth=3),
    "synthetic2": dict(dataset="synthetic2", train_len=1400, val_len=300, test_len=500, depth=2),
}


def read_config_file(path) -> dict:
    """Flat ``key = value`` file, ``#`` comments."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such config file: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string("[pipeline]\n" + path.read_text())
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    return dict(cp["pipeline"])


def make_config(values: dict | None = None, **overrides) -> PipelineConfig:
    """Build a config from file values then flag overrides (``None`` = not given).

    A named dataset pulls its preset (split lengths, depth) in as defaults.
    """
    by_name = {f.name: f for f in fields(PipelineConfig)}
    values = values or {}
    dataset = overrides.get("dataset") or values.get("dataset")
    kw = {}
    for src in PRESETS.get(str(dataset).strip(), {}), values, overrides:
        for k, v in src.items():
            if v is None:
                continue
            if k not in by_name:
                raise ConfigError(f"unknown config key {k!r}")
            kw[k] = _coerce(by_name[k], v)
    return PipelineConfig(**kw).validate()


# ---------------------------------------------------------------- data prep


@dataclass
class Prepared:
    raw: TimeSeries
    series: TimeSeries          # normalized, train+val+test only
    labels: LabelTrack | None
    norm: NormalizationParams
    train: TimeSeries
    val: TimeSeries
    test: TimeSeries


def synthetic_spec(cfg: PipelineConfig, channels: int) -> SyntheticSpec:
    rng = np.random.default_rng(cfg.synth_seed)
    daily = tuple(float(v) for v in rng.uniform(0.6, 1.2, channels))
    weekly = tuple(float(v) for v in rng.uniform(0.6, 1.2, channels))
    mag = cfg.synth_magnitude or 6.0 * cfg.synth_noise
    # anomalies everywhere, at the same rate, so training data is contaminated too
    inj = random_injections(cfg.synth_length, cfg.synth_contamination, start=cfg.L + 1,
                            magnitude=mag, n_channels=channels, rng_seed=cfg.synth_seed + 1)
    return SyntheticSpec(channels=channels, length=cfg.synth_length, daily_amplitude=daily,
                         weekly_amplitude=weekly, noise_std=cfg.synth_noise, injections=inj,
                         rng_seed=cfg.synth_seed, trend_slope=0.5)


def load_dataset(cfg: PipelineConfig) -> tuple[TimeSeries, LabelTrack | None]:
    if cfg.dataset == "calit2":
        return datasets.load_calit2(cfg.data_dir or None)
    if cfg.dataset == "dodgers":
        return datasets.load_dodgers(cfg.data_dir or None)
    if cfg.dataset in ("synthetic2", "synthetic5"):
        return generate_synthetic(synthetic_spec(cfg, int(cfg.dataset[-1])))
    if not cfg.data:
        raise ConfigError("dataset = csv needs a data path")
    series = load_csv(cfg.data, fill_gaps=cfg.fill_gaps, utc_offset=cfg.utc_offset)
    if series.interval != cfg.interval:
        series = aggregate_to_interval(series, cfg.interval, cfg.reducer)
    labels = load_labels(cfg.labels, cfg.utc_offset) if cfg.labels else None
    return series, labels


def prepare(cfg: PipelineConfig) -> Prepared:
    raw, labels = load_dataset(cfg)
    n = cfg.train_len + cfg.val_len + cfg.test_len
    tr, va, te = split(raw, cfg.train_len, cfg.val_len, cfg.test_len)
    norm = fit_normalization(tr)
    series = normalize(raw.slice(0, n), norm)
    train_s, val_s, test_s = split(series, cfg.train_len, cfg.val_len, cfg.test_len)
    return Prepared(raw, series, labels, norm, train_s, val_s, test_s)


# ------------------------------------------------------------------- stages


def run_decompose(cfg: PipelineConfig, prep: Prepared | None = None) -> SeasonalProfile:
    prep = prep or prepare(cfg)
    return fit_decomposition(prep.train, cfg.decomposition())


def run_train(cfg: PipelineConfig, prep: Prepared, profile: SeasonalProfile | None,
              seasonal: bool | None = None) -> tuple[ForecastModel, dict]:
    seasonal = cfg.seasonal if seasonal is None else seasonal
    topo = NetworkTopology(prep.series.m, cfg.L, cfg.hidden, cfg.depth, seasonal)
    tcfg = cfg.training()
    model = ForecastModel.init(topo, seed=cfg.seed, profile=profile if seasonal else None, config=tcfg)
    t0 = time.perf_counter()
    model = train(model, prep.train, config=tcfg, val_series=prep.val if len(prep.val) > cfg.L else None)
    wall = time.perf_counter() - t0
    test_mse = evaluate_mse(model, prep.test, warmup=concat(prep.train, prep.val))
    metrics = {"topology": topo.describe(), "output_width": topo.output_width,
               "test_mse": test_mse, "best_val_mse": model.report.best_val_mse,
               "epochs": model.report.epochs, "best_epoch": model.report.best_epoch,
               "wall_time_s": wall}
    return model, metrics


def reference_forecasts(model, prep: Prepared) -> np.ndarray:
    """Forecasts for each validation frame, hidden state warmed on the training split."""
    return model.forecast_series(prep.val, warmup=prep.train)


def run_calibrate(cfg: PipelineConfig, prep: Prepared, model) -> tuple[ScoringParams, CalibrationReport]:
    fc = reference_forecasts(model, prep)
    return calibrate(fc, prep.val.values, cfg.L, cfg.c, max_iterations=cfg.max_iterations,
                     calibrated_on=f"{cfg.dataset}:validation[{len(prep.val)}]")


def make_detector(model, params: ScoringParams, cfg: PipelineConfig, lanes: int | None = None) -> Detector:
    return Detector(model, params, cfg.L, method=cfg.method, lanes=lanes or cfg.lanes)


def run_detect(cfg: PipelineConfig, prep: Prepared, model, params: ScoringParams,
               lanes: int | None = None) -> ScoreStream:
    """Stream the test split through the detector; the model state is first warmed on train+val."""
    det = make_detector(model, params, cfg, lanes)
    model.forecast_series(concat(prep.train, prep.val))
    return det.run(prep.test)


def run_evaluate(scores: ScoreStream, labels: LabelTrack) -> RocCurve:
    return roc_auc(scores, labels)


def run_bench(cfg: PipelineConfig, prep: Prepared, model, params: ScoringParams,
              L_values=(5, 10, 20, 30), lanes: int = 1, repeats: int = 3) -> list[BenchReport]:
    """Per-frame overhead across L. Each L other than ``cfg.L`` gets an untrained model
    of the same shape; every detector owns a warmed copy of its model."""
    models = {}
    for L in L_values:
        if L == cfg.L:
            models[L] = model
        else:
            topo = dataclasses.replace(model.topology, L=L)
            models[L] = ForecastModel.init(topo, seed=cfg.seed, profile=model.profile)
    warm = concat(prep.train, prep.val)

    def factory(L, n_lanes):
        m = models[L].copy()
        m.forecast_series(warm)
        return make_detector(m, params, dataclasses.replace(cfg, L=L), n_lanes)

    return bench_detection(factory, prep.test, L_values, lanes, repeats)


@dataclass
class ReproResult:
    profile: SeasonalProfile
    model: ForecastModel
    metrics: dict
    params: ScoringParams
    calibration: CalibrationReport
    scores: ScoreStream
    roc: RocCurve | None


def repro(cfg: PipelineConfig, write: bool = True) -> ReproResult:
    prep = prepare(cfg)
    profile = run_decompose(cfg, prep)
    model, metrics = run_train(cfg, prep, profile)
    params, report = run_calibrate(cfg, prep, model)
    scores = run_detect(cfg, prep, model, params)
    roc = None
    if prep.labels is not None:
        roc = run_evaluate(scores, prep.labels)
        metrics["auc"] = roc.auc
    if write:
        out = cfg.out_dir
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(cfg.to_text())
        profile.save(out / "profile.json")
        model.save(out / "model.json")
        params.save(out / "params.json")
        scores.to_csv(out / "scores.csv")
        (out / "metrics.json").write_text(json.dumps(metrics, indent=1) + "\n")
        if roc is not None:
            roc.to_csv(out / "roc.csv")
    return ReproResult(profile, model, metrics, params, report, scores, roc)
