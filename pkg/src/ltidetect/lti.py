"""Local Trend Inconsistency.

For a frame ``t`` and the forecasts made by the previous ``L`` frames,

    LTI(t) = sum_i (1 - AS(i)) * WLSDist(S(i+1, t), S_i(i+1, t)) / sum_i (1 - AS(i))

Two evaluations are provided: ``lti_scalar`` loops over sources, ``lti_matrix``
uses the padded frame-distance matrix ``D_F`` so that ``LTI = P N2 N1 D_F T``.
Both must agree to 1e-12.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import LocalSequence, PredictedSequence
from .errors import ConfigError, DataError, DegenerateWeightsError, WarmupError

Z_FLOOR = 1e-9


def _as_array(seq) -> np.ndarray:
    if isinstance(seq, LocalSequence):
        return seq.values
    return np.asarray(seq, dtype=np.float64)


def dfdist(x, y) -> float:
    """Mean squared per-channel difference of two frames (no square root)."""
    x = np.asarray(getattr(x, "values", x), dtype=np.float64).ravel()
    y = np.asarray(getattr(y, "values", y), dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DataError(f"frame dimension mismatch: {x.size} vs {y.size}")
    d = x - y
    return float(np.dot(d, d) / x.size)


def _frame_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a - b
    return np.einsum("ij,ij->i", d, d) / a.shape[1]


def lsdist(a, b) -> float:
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise DataError(f"sequence shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(_frame_dists(a, b)))


@dataclass(frozen=True)
class DecayVector:
    """``d[i-1] = e^-(L-i)`` and ``D[j-1] = sum_{i<=j} e^-(j-i)``."""

    d: np.ndarray
    D: np.ndarray

    @property
    def L(self) -> int:
        return len(self.d)

    def weights(self, length: int) -> np.ndarray:
        """Right-aligned weights for a window of ``length`` frames (most recent last)."""
        return self.d[self.L - length:]


@lru_cache(maxsize=None)
def decay_weights(L: int) -> DecayVector:
    if L < 1:
        raise ConfigError("L must be >= 1")
    d = np.exp(-(L - np.arange(1, L + 1, dtype=np.float64)))
    # D_j from the same weights (exactly rounded) rather than the closed form
    D = np.array([math.fsum(d[L - j:]) for j in range(1, L + 1)])
    d.setflags(write=False)
    D.setflags(write=False)
    return DecayVector(d, D)


def wlsdist(actual, predicted, decay: DecayVector) -> float:
    """Time-decay weighted sequence distance; the last frame is the most recent."""
    a, p = _as_array(actual), _as_array(predicted)
    if a.shape != p.shape:
        raise DataError(f"sequence shape mismatch: {a.shape} vs {p.shape}")
    n = len(a)
    if n == 0:
        raise DataError("empty sequence")
    if n > decay.L:
        raise DataError(f"sequence length {n} exceeds decay length {decay.L}")
    return float(np.dot(decay.weights(n), _frame_dists(a, p)) / decay.D[n - 1])


# ----------------------------------------------------------------- buffer


@dataclass
class _Source:
    index: int
    frames: np.ndarray  # (L, m)
    score: float


class PredictionBuffer:
    """The last ``L`` forecast sources with their anomaly scores, plus recent actuals."""

    def __init__(self, L: int):
        if L < 1:
            raise ValueError("L must be >= 1")
        self.L = L
        self.sources: deque[_Source] = deque(maxlen=L)
        self._actuals: deque[tuple[int, np.ndarray]] = deque(maxlen=L + 1)

    def push_actual(self, index: int, values) -> None:
        if self._actuals and index != self._actuals[-1][0] + 1:
            raise DataError(f"actual frame {index} does not follow {self._actuals[-1][0]}")
        self._actuals.append((index, np.asarray(values, dtype=np.float64)))

    def push_source(self, forecast: PredictedSequence, score: float = 0.0) -> None:
        if forecast.L != self.L:
            raise DataError(f"forecast length {forecast.L} != buffer capacity {self.L}")
        if not 0.0 <= score <= 1.0:
            raise ValueError("anomaly score must lie in [0, 1]")
        if self.sources and forecast.source_index != self.sources[-1].index + 1:
            raise DataError("forecast sources must be contiguous")
        self.sources.append(_Source(forecast.source_index, forecast.frames, float(score)))

    def set_score(self, index: int, score: float) -> None:
        for s in self.sources:
            if s.index == index:
                s.score = float(score)
                return
        raise KeyError(index)

    def actual(self, start: int, end: int) -> np.ndarray:
        first = self._actuals[0][0]
        if start < first or end > self._actuals[-1][0]:
            raise DataError(f"actual frames {start}..{end} are not buffered")
        return np.stack([v for _, v in list(self._actuals)[start - first:end - first + 1]])

    def active(self, t: int, allow_partial: bool = False) -> list[_Source]:
        """Sources ``t-L..t-1`` that forecast frame ``t``."""
        src = [s for s in self.sources if t - self.L <= s.index < t]
        if not src or (len(src) < self.L and not allow_partial):
            raise WarmupError(f"frame {t}: {len(src)} of {self.L} forecast sources available")
        return src


@dataclass
class LTIResult:
    t: int
    value: float
    wls: np.ndarray  # per source t-L..t-1, NaN where a source is absent
    z_t: float
    low_confidence: bool = False

    @property
    def flags(self) -> list[str]:
        return ["low_confidence"] if self.low_confidence else []

    def to_record(self) -> dict:
        return {"t": self.t, "lti": self.value,
                "wlsdist": [None if math.isnan(v) else v for v in self.wls.tolist()],
                "z_t": self.z_t, "flags": self.flags}


def _weights(scores: np.ndarray, fallback: bool, t: int):
    w = 1.0 - scores
    z = math.fsum(w)
    if z < Z_FLOOR:
        if not fallback:
            raise DegenerateWeightsError(f"frame {t}: Z_t = {z:.3g} (every source scored anomalous)")
        return np.ones_like(w), float(len(w)), True
    return w, z, False


def lti_from_terms(t: int, wls: np.ndarray, scores: np.ndarray, *, fallback: bool = True) -> LTIResult:
    """Combine per-source WLSDist terms with source reliabilities ``1 - AS``."""
    present = ~np.isnan(wls)
    w, z, low = _weights(scores[present], fallback, t)
    value = math.fsum(w * wls[present]) / z
    return LTIResult(t, value, wls, z, low)


def lti_scalar(t: int, buffer: PredictionBuffer, decay: DecayVector | None = None, *,
               allow_partial: bool = False, fallback: bool = True) -> LTIResult:
    decay = decay or decay_weights(buffer.L)
    sources = buffer.active(t, allow_partial)
    L = buffer.L
    wls = np.full(L, np.nan)
    scores = np.zeros(L)
    for s in sources:
        r = s.index - (t - L)
        wls[r] = wlsdist(buffer.actual(s.index + 1, t), s.frames[:t - s.index], decay)
        scores[r] = s.score
    return lti_from_terms(t, wls, scores, fallback=fallback)


# ------------------------------------------------------------ matrix form


class FrameDistanceMatrix:
    """Padded ``L x L`` matrix; row ``r`` is source ``t-L+r``, column ``c`` target ``t-L+1+c``.

    Row ``r`` holds ``L - r`` right-aligned entries. Advancing by one frame shifts
    the matrix up-left and fills only the new last column, ``O(L m)`` work.
    """

    def __init__(self, L: int):
        self.L = L
        self.F = np.zeros((L, L))
        self.present = np.zeros(L, dtype=bool)
        self.t: int | None = None

    def advance(self, t: int, actual, sources) -> None:
        L = self.L
        if self.t is None or t != self.t + 1:
            self.F[:] = 0.0
            self.present[:] = False
        else:
            self.F[:-1, :-1] = self.F[1:, 1:].copy()
            self.F[-1, :] = 0.0
            self.F[:, -1] = 0.0
            self.present[:-1] = self.present[1:].copy()
            self.present[-1] = False
        rows, preds = [], []
        for s in sources:
            r = s.index - (t - L)
            if 0 <= r < L:
                rows.append(r)
                preds.append(s.frames[t - s.index - 1])
        if rows:
            self.F[rows, -1] = _frame_dists(np.stack(preds), np.broadcast_to(actual, (len(rows), len(actual))))
            self.present[rows] = True
        self.t = t

    @classmethod
    def from_buffer(cls, t: int, buffer: PredictionBuffer, allow_partial: bool = False) -> "FrameDistanceMatrix":
        """Build from scratch, ``O(L^2 m)``."""
        L = buffer.L
        fm = cls(L)
        for s in buffer.active(t, allow_partial):
            r = s.index - (t - L)
            n = t - s.index
            fm.F[r, L - n:] = _frame_dists(s.frames[:n], buffer.actual(s.index + 1, t))
            fm.present[r] = True
        fm.t = t
        return fm


_POOLS: dict[int, ThreadPoolExecutor] = {}


def _pool(lanes: int) -> ThreadPoolExecutor:
    if lanes not in _POOLS:
        _POOLS[lanes] = ThreadPoolExecutor(max_workers=lanes, thread_name_prefix="lti")
    return _POOLS[lanes]


def _rows_ds(F: np.ndarray, d: np.ndarray, n1: np.ndarray, lo: int, hi: int) -> np.ndarray:
    # column-by-column accumulation keeps every row's summation order fixed
    acc = np.zeros(hi - lo)
    for c in range(F.shape[1]):
        acc += F[lo:hi, c] * d[c]
    return acc * n1[lo:hi]


def sequence_distances(fm: FrameDistanceMatrix, decay: DecayVector, lanes: int = 1) -> np.ndarray:
    """``D_S = N1 D_F T``, rows split across ``lanes`` worker threads."""
    L = fm.L
    n1 = 1.0 / decay.D[::-1]  # row r has L - r entries
    if lanes <= 1 or L < 2:
        return _rows_ds(fm.F, decay.d, n1, 0, L)
    bounds = np.linspace(0, L, min(lanes, L) + 1).astype(int)
    futs = [_pool(lanes).submit(_rows_ds, fm.F, decay.d, n1, lo, hi)
            for lo, hi in zip(bounds[:-1], bounds[1:])]
    return np.concatenate([f.result() for f in futs])


def lti_matrix(t: int, buffer: PredictionBuffer, decay: DecayVector | None = None, *,
               fm: FrameDistanceMatrix | None = None, lanes: int = 1,
               allow_partial: bool = False, fallback: bool = True) -> LTIResult:
    """``LTI(t) = P N2 N1 D_F T``; pass an incrementally maintained ``fm`` to skip the rebuild."""
    decay = decay or decay_weights(buffer.L)
    L = buffer.L
    sources = buffer.active(t, allow_partial)
    if fm is None or fm.t != t:
        fm = FrameDistanceMatrix.from_buffer(t, buffer, allow_partial)
    ds = sequence_distances(fm, decay, lanes)
    scores = np.zeros(L)
    for s in sources:
        scores[s.index - (t - L)] = s.score
    ds = np.where(fm.present, ds, np.nan)
    present = fm.present
    w, z, low = _weights(scores[present], fallback, t)
    p = np.zeros(L)
    p[present] = w
    value = math.fsum((p / z) * np.nan_to_num(ds))
    return LTIResult(t, value, ds, z, low)
