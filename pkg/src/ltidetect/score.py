"""Logistic anomaly scoring, fixed-point calibration of (k, x0), and the online detector."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .core import PredictedSequence, format_timestamp
from .errors import ConfigError, DataError, DegenerateReferenceError
from .lti import (FrameDistanceMatrix, LTIResult, PredictionBuffer, decay_weights, lti_from_terms,
                  lti_matrix, lti_scalar, wlsdist)

SIGMA_FLOOR = 1e-9


@dataclass(frozen=True)
class ScoringParams:
    k: float
    x0: float
    c: float = 1.0
    calibrated_on: str = ""
    iterations: int = 0

    def __post_init__(self):
        if not self.k > 0:
            raise ConfigError(f"logistic growth rate must be positive, got {self.k}")
        if not 0.0 <= self.x0 <= 1.0:
            raise ConfigError(f"logistic midpoint must lie in [0, 1], got {self.x0}")

    def to_dict(self) -> dict:
        return {"k": self.k, "x0": self.x0, "c": self.c,
                "calibrated_on": self.calibrated_on, "iterations": self.iterations}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "ScoringParams":
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such file: {path}")
        d = json.loads(path.read_text())
        return cls(float(d["k"]), float(d["x0"]), float(d.get("c", 1.0)),
                   d.get("calibrated_on", ""), int(d.get("iterations", 0)))


def phi(x, params: ScoringParams):
    """``1 / (1 + exp(-k (x - x0)))``, evaluated without overflow."""
    a = params.k * (np.asarray(x, dtype=np.float64) - params.x0)
    e = np.exp(-np.abs(a))
    out = np.where(a >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------- calibration


@dataclass
class CalibrationReport:
    iterations: int
    k: float
    x0: float
    trace: list[tuple[float, float]]
    converged: bool
    lti: np.ndarray = field(repr=False)
    scores: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "k": self.k, "x0": self.x0,
                "converged": self.converged, "trace": [list(p) for p in self.trace]}


def wls_table(forecasts: np.ndarray, actuals: np.ndarray, L: int) -> np.ndarray:
    """(r, L) table of WLSDist terms: row t, column j is source ``t - L + j``; NaN before L."""
    decay = decay_weights(L)
    r = len(actuals)
    out = np.full((r, L), np.nan)
    for t in range(L, r):
        for j in range(L):
            i = t - L + j
            out[t, j] = wlsdist(actuals[i + 1:t + 1], forecasts[i, :t - i], decay)
    return out


def _sweep(table: np.ndarray, scores: np.ndarray, params: ScoringParams, L: int) -> np.ndarray:
    lti = np.empty(len(table) - L)
    for t in range(L, len(table)):
        res = lti_from_terms(t, table[t], scores[t - L:t])
        lti[t - L] = res.value
        scores[t] = phi(res.value, params)
    return lti


def calibrate(forecasts, actuals, L: int, c: float = 1.0, *, max_iterations: int = 100,
              tol: float = 1e-3, calibrated_on: str = ""):
    """Fit (k, x0) on a reference stream by the mean/stdev fixed point.

    ``forecasts[i]`` is the (L, m) forecast made by reference frame ``i``;
    ``actuals`` is the (r, m) reference stream. Starts from k = 1, x0 = 0.5 and
    AS = 0; each sweep scores frames L..r-1 in order (scores feed back into later
    weights) and then sets k = c / stdev(LTI), x0 = mean(LTI). Stops when both
    change by less than ``tol`` relative, or after ``max_iterations``.
    """
    fc = np.asarray([f.frames if isinstance(f, PredictedSequence) else f for f in forecasts],
                    dtype=np.float64)
    actuals = np.asarray(actuals, dtype=np.float64)
    r = len(actuals)
    if r <= L:
        raise DataError(f"reference length {r} must exceed L={L}")
    if fc.shape[0] < r or fc.shape[1] != L:
        raise DataError(f"need (r, L, m) forecasts for every reference frame, got {fc.shape}")
    table = wls_table(fc, actuals, L)
    params = ScoringParams(1.0, 0.5, c)
    scores = np.zeros(r)  # initialised once, carried across sweeps
    trace = []
    converged = False
    lti = np.empty(0)
    for it in range(1, max_iterations + 1):
        lti = _sweep(table, scores, params, L)
        sigma = float(np.std(lti))
        if sigma < SIGMA_FLOOR:
            raise DegenerateReferenceError(
                f"stdev(LTI) = {sigma:.3g} on the reference; cannot set the growth rate")
        k_new, x0_new = c / sigma, float(np.mean(lti))
        trace.append((k_new, x0_new))
        done = (abs(k_new - params.k) < tol * abs(params.k)
                and abs(x0_new - params.x0) < tol * abs(params.x0))
        params = ScoringParams(k_new, min(max(x0_new, 0.0), 1.0), c, calibrated_on, it)
        if done:
            converged = True
            break
    report = CalibrationReport(it, params.k, params.x0, trace, converged, lti, scores[L:].copy())
    return params, report


# ---------------------------------------------------------------- detection


class Forecaster(Protocol):
    def forecast(self, timestamp: int, values) -> np.ndarray: ...
    def reset(self) -> None: ...


@dataclass
class ScoreRecord:
    t: int
    timestamp: int
    lti: float
    score: float
    flags: list[str] = field(default_factory=list)
    wls: np.ndarray | None = field(default=None, repr=False)
    z_t: float = math.nan


def detect(t: int, buffer: PredictionBuffer, params: ScoringParams, *, method: str = "scalar",
           fm: FrameDistanceMatrix | None = None, lanes: int = 1) -> tuple[float, LTIResult]:
    """Score frame ``t`` against the buffered forecasts: returns ``(AS(t), LTI result)``.

    The caller stores AS(t) with frame t's own forecast so it weights later frames.
    """
    if method == "scalar":
        res = lti_scalar(t, buffer)
    elif method == "matrix":
        res = lti_matrix(t, buffer, fm=fm, lanes=lanes)
    else:
        raise ConfigError(f"unknown LTI method {method!r}")
    return phi(res.value, params), res


class Detector:
    """Chronological AD loop: one call to :meth:`step` per arriving frame.

    Frames ``0..L-1`` are warm-up (returns ``None``) and carry AS = 0.
    """

    def __init__(self, forecaster: Forecaster, params: ScoringParams, L: int, *,
                 method: str = "matrix", lanes: int = 1):
        self.forecaster = forecaster
        self.params = params
        self.L = L
        self.method = method
        # threads beyond the core count only add scheduling cost
        self.lanes = max(1, min(lanes, os.cpu_count() or 1))
        self.reset()

    def reset(self) -> None:
        self.buffer = PredictionBuffer(self.L)
        self.fm = FrameDistanceMatrix(self.L)
        self.t = 0
        self.forecaster.reset()

    def step(self, timestamp: int, values, forecast=None) -> ScoreRecord | None:
        """Ingest frame ``t``; ``forecast`` may supply a precomputed (L, m) forecast from it."""
        values = np.asarray(values, dtype=np.float64)
        t = self.t
        self.buffer.push_actual(t, values)
        rec = None
        score = 0.0
        if t >= self.L:
            if self.method == "matrix":
                self.fm.advance(t, values, self.buffer.active(t))
            score, res = detect(t, self.buffer, self.params, method=self.method,
                                fm=self.fm, lanes=self.lanes)
            rec = ScoreRecord(t, int(timestamp), res.value, score, res.flags, res.wls, res.z_t)
        elif self.method == "matrix":
            self.fm.advance(t, values, list(self.buffer.sources))
        if forecast is None:
            forecast = self.forecaster.forecast(timestamp, values)
        self.buffer.push_source(PredictedSequence(t, forecast), score)
        self.t += 1
        return rec

    def run(self, series, forecasts=None) -> "ScoreStream":
        """Score every frame of ``series`` in order (state is not reset first)."""
        out = ScoreStream(utc_offset=series.utc_offset)
        for i in range(len(series)):
            rec = self.step(int(series.timestamps[i]), series.values[i],
                            None if forecasts is None else forecasts[i])
            if rec is not None:
                out.records.append(rec)
        return out


@dataclass
class ScoreStream:
    records: list[ScoreRecord] = field(default_factory=list)
    utc_offset: int = 0

    def __len__(self) -> int:
        return len(self.records)

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([r.timestamp for r in self.records], dtype=np.int64)

    @property
    def scores(self) -> np.ndarray:
        return np.array([r.score for r in self.records])

    @property
    def lti(self) -> np.ndarray:
        return np.array([r.lti for r in self.records])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "lti", "as", "flags"])
            for r in self.records:
                w.writerow([format_timestamp(r.timestamp, self.utc_offset), repr(r.lti),
                            repr(r.score), "|".join(r.flags)])

    def diagnostics_jsonl(self, path) -> None:
        with Path(path).open("w") as fh:
            for r in self.records:
                wls = [] if r.wls is None else [None if math.isnan(v) else v for v in r.wls.tolist()]
                fh.write(json.dumps({"t": r.t, "lti": r.lti, "wlsdist": wls,
                                     "z_t": r.z_t, "flags": r.flags}) + "\n")

    @classmethod
    def from_csv(cls, path, utc_offset: int = 0) -> "ScoreStream":
        from .core import parse_timestamp
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such file: {path}")
        out = cls(utc_offset=utc_offset)
        with path.open(newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh)):
                out.records.append(ScoreRecord(i, parse_timestamp(row["timestamp"], utc_offset),
                                               float(row["lti"]), float(row["as"]),
                                               [f for f in row.get("flags", "").split("|") if f]))
        return out
