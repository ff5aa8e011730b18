"""Frame-to-sequence forecaster: stacked GRU over (raw frame ++ seasonal terms) -> next L frames."""

from __future__ import annotations

import base64
import copy
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..core import PredictedSequence, TimeSeries
from ..decomp import SeasonalProfile
from ..errors import ConfigError, DataError, DivergenceError
from .gru import Adam, GRULayer, gru_cell_forward, layer_backward, layer_forward

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NetworkTopology:
    m: int
    L: int
    hidden_width: int = 20
    depth: int = 2
    seasonal: bool = True

    def __post_init__(self):
        if min(self.m, self.L, self.hidden_width, self.depth) < 1:
            raise ConfigError("topology widths must be positive")

    @property
    def input_width(self) -> int:
        return 3 * self.m if self.seasonal else self.m

    @property
    def output_width(self) -> int:
        return self.m * self.L

    def describe(self) -> str:
        return f"[{self.input_width}, {self.hidden_width}x{self.depth}, {self.output_width}]"


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 6e-6
    time_steps: int = 72
    max_epochs: int = 200
    patience: int | None = 10
    rng_seed: int = 0

    def __post_init__(self):
        if self.time_steps < 1:
            raise ConfigError("time_steps must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")


@dataclass
class TrainingReport:
    epochs: int = 0
    best_epoch: int = 0
    train_loss: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def best_val_mse(self) -> float:
        return self.val_mse[self.best_epoch - 1] if self.val_mse else math.nan


class ForecastModel:
    """Parameters plus streaming inference state.

    ``forecast`` consumes frames in chronological order; the hidden state is
    carried between calls until :meth:`reset`.
    """

    def __init__(self, topology: NetworkTopology, layers: list[GRULayer], V: np.ndarray,
                 c: np.ndarray, profile: SeasonalProfile | None = None,
                 config: TrainingConfig | None = None):
        self.topology = topology
        self.layers = layers
        self.V = V  # (m*L, H)
        self.c = c  # (m*L,)
        self.profile = profile
        self.config = config or TrainingConfig()
        self.report = TrainingReport()
        self._check_shapes()
        self.reset()

    @classmethod
    def init(cls, topology: NetworkTopology, seed: int = 0, profile: SeasonalProfile | None = None,
             config: TrainingConfig | None = None) -> "ForecastModel":
        rng = np.random.default_rng(seed)
        H = topology.hidden_width
        layers = [GRULayer.init(topology.input_width if i == 0 else H, H, rng)
                  for i in range(topology.depth)]
        k = 1.0 / np.sqrt(H)
        V = rng.uniform(-k, k, (topology.output_width, H))
        c = rng.uniform(-k, k, topology.output_width)
        return cls(topology, layers, V, c, profile, config)

    @classmethod
    def zeros(cls, topology: NetworkTopology, profile: SeasonalProfile | None = None) -> "ForecastModel":
        H = topology.hidden_width
        layers = [GRULayer(np.zeros((3 * H, topology.input_width if i == 0 else H)),
                           np.zeros((3 * H, H)), np.zeros(3 * H)) for i in range(topology.depth)]
        return cls(topology, layers, np.zeros((topology.output_width, H)),
                   np.zeros(topology.output_width), profile)

    def _check_shapes(self):
        t = self.topology
        H = t.hidden_width
        if len(self.layers) != t.depth:
            raise DataError(f"expected {t.depth} layers, got {len(self.layers)}")
        for i, lay in enumerate(self.layers):
            n_in = t.input_width if i == 0 else H
            if lay.W.shape != (3 * H, n_in) or lay.U.shape != (3 * H, H) or lay.b.shape != (3 * H,):
                raise DataError(f"layer {i} parameter shapes inconsistent with topology {t.describe()}")
        if self.V.shape != (t.output_width, H) or self.c.shape != (t.output_width,):
            raise DataError("output head shape inconsistent with topology")
        if t.seasonal and self.profile is not None and self.profile.m != t.m:
            raise DataError("seasonal profile channel count differs from topology")

    # -- parameters -------------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        out = []
        for lay in self.layers:
            out += [lay.W, lay.U, lay.b]
        return out + [self.V, self.c]

    def parameter_names(self) -> list[str]:
        names = []
        for i in range(len(self.layers)):
            names += [f"layer{i}.W", f"layer{i}.U", f"layer{i}.b"]
        return names + ["head.V", "head.c"]

    def copy(self) -> "ForecastModel":
        new = copy.deepcopy(self)
        new.reset()
        return new

    # -- inputs -----------------------------------------------------------

    def inputs(self, series: TimeSeries) -> np.ndarray:
        if series.m != self.topology.m:
            raise DataError(f"series has {series.m} channels, model expects {self.topology.m}")
        if not self.topology.seasonal:
            return np.asarray(series.values)
        if self.profile is None:
            raise DataError("seasonal model needs a SeasonalProfile")
        return np.hstack([series.values, self.profile.features(series.timestamps)])

    # -- streaming inference ---------------------------------------------

    def reset(self) -> None:
        self._h = [np.zeros(self.topology.hidden_width) for _ in self.layers]
        self._last_ts: int | None = None
        self._n_seen = 0

    def step_input(self, x: np.ndarray) -> np.ndarray:
        """Advance the hidden state on one input vector; return the raw (m*L,) head output."""
        inp = x
        for i, lay in enumerate(self.layers):
            self._h[i] = gru_cell_forward(inp, self._h[i], lay)
            inp = self._h[i]
        return self.V @ inp + self.c

    def forward(self, timestamp: int, values, seasonal=None, source_index: int | None = None) -> PredictedSequence:
        """Consume one frame and forecast the next L frames (clamped to [0, 1])."""
        if self._last_ts is not None and timestamp <= self._last_ts:
            raise DataError(f"out-of-order frame: {timestamp} after {self._last_ts}")
        values = np.asarray(values, dtype=np.float64)
        if self.topology.seasonal:
            if seasonal is None:
                seasonal = self.profile.features([timestamp])[0]
            x = np.concatenate([values, seasonal])
        else:
            x = values
        y = self.step_input(x)
        self._last_ts = int(timestamp)
        idx = self._n_seen if source_index is None else source_index
        self._n_seen += 1
        return PredictedSequence(idx, np.clip(y, 0.0, 1.0).reshape(self.topology.L, self.topology.m))

    def forecast(self, timestamp: int, values) -> np.ndarray:
        return self.forward(timestamp, values).frames

    def forecast_series(self, series: TimeSeries, warmup: TimeSeries | None = None) -> np.ndarray:
        """(n, L, m) clamped forecasts for every frame of ``series`` from a fresh state.

        ``warmup`` frames are fed first (forecasts discarded) to settle the hidden state.
        """
        self.reset()
        if warmup is not None and len(warmup):
            self._run(self.inputs(warmup))
        ys = self._run(self.inputs(series))
        self._last_ts = int(series.timestamps[-1]) if len(series) else self._last_ts
        return np.clip(ys, 0.0, 1.0).reshape(len(series), self.topology.L, self.topology.m)

    def _run(self, X: np.ndarray) -> np.ndarray:
        inp = X
        for i, lay in enumerate(self.layers):
            inp, _ = layer_forward(inp, self._h[i], lay)
            if len(inp):
                self._h[i] = inp[-1].copy()
        return inp @ self.V.T + self.c

    # -- checkpoint -------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(a):
            return {"shape": list(a.shape),
                    "data": base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode()}
        return {
            "format": "ltidetect-gru/1",
            "topology": asdict(self.topology),
            "training_config": asdict(self.config),
            "report": asdict(self.report),
            "params": {n: enc(p) for n, p in zip(self.parameter_names(), self.parameters())},
            "profile": self.profile.to_dict() if self.profile is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForecastModel":
        topo = NetworkTopology(**d["topology"])
        raw = {}
        for name, p in d["params"].items():
            a = np.frombuffer(base64.b64decode(p["data"]), dtype="<f8").astype(np.float64)
            if a.size != int(np.prod(p["shape"])):
                raise DataError(f"checkpoint parameter {name}: data does not match shape {p['shape']}")
            raw[name] = a.reshape(p["shape"])
        try:
            layers = [GRULayer(raw[f"layer{i}.W"], raw[f"layer{i}.U"], raw[f"layer{i}.b"])
                      for i in range(topo.depth)]
            V, c = raw["head.V"], raw["head.c"]
        except KeyError as e:
            raise DataError(f"checkpoint missing parameter {e}") from None
        profile = SeasonalProfile.from_dict(d["profile"]) if d.get("profile") else None
        model = cls(topo, layers, V, c, profile, TrainingConfig(**d.get("training_config", {})))
        if d.get("report"):
            model.report = TrainingReport(**d["report"])
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "ForecastModel":
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such file: {path}")
        return cls.from_dict(json.loads(path.read_text()))


def forward(model: ForecastModel, frame, seasonal=None) -> PredictedSequence:
    return model.forward(frame.timestamp, frame.values, seasonal)


# ---------------------------------------------------------------- training


def targets(values: np.ndarray, L: int) -> tuple[np.ndarray, np.ndarray]:
    """(n, m*L) next-L-frame targets and a mask of sources whose horizon lies inside ``values``."""
    n, m = values.shape
    Y = np.zeros((n, m * L))
    mask = np.zeros(n, dtype=bool)
    for i in range(n - L):
        Y[i] = values[i + 1:i + 1 + L].ravel()
        mask[i] = True
    return Y, mask


def sequence_loss_and_grads(model: ForecastModel, X: np.ndarray, Y: np.ndarray, mask: np.ndarray,
                            h0: list[np.ndarray]):
    """MSE over masked steps of one window and gradients for every parameter.

    Returns ``(loss, grads, h_last)``; ``grads`` follows :meth:`ForecastModel.parameters`.
    """
    caches = []
    inp = X
    for i, lay in enumerate(model.layers):
        inp, cache = layer_forward(inp, h0[i], lay)
        caches.append(cache)
    top = inp
    out = top @ model.V.T + model.c
    n_terms = max(int(mask.sum()), 1) * out.shape[1]
    err = (out - Y) * mask[:, None]
    loss = float(np.sum(err * err) / n_terms)
    dout = 2.0 * err / n_terms
    dV = dout.T @ top
    dc = dout.sum(axis=0)
    dh = dout @ model.V
    layer_grads = []
    for i in range(len(model.layers) - 1, -1, -1):
        g, dh, _ = layer_backward(dh, caches[i], model.layers[i])
        layer_grads.append(g)
    grads = []
    for g in reversed(layer_grads):
        grads += list(g)
    h_last = [c[1][-1].copy() for c in caches]
    return loss, grads + [dV, dc], h_last


def evaluate_mse(model: ForecastModel, series: TimeSeries, warmup: TimeSeries | None = None) -> float:
    """MSE of clamped L-step forecasts over sources whose horizon stays inside ``series``."""
    L = model.topology.L
    preds = model.forecast_series(series, warmup)
    Y, mask = targets(series.values, L)
    if not mask.any():
        raise DataError(f"series of {len(series)} frames is too short for L={L}")
    diff = preds.reshape(len(series), -1)[mask] - Y[mask]
    return float(np.mean(diff * diff))


def train(model: ForecastModel, series: TimeSeries, profile: SeasonalProfile | None = None,
          config: TrainingConfig | None = None, val_series: TimeSeries | None = None) -> ForecastModel:
    """Truncated-BPTT training with Adam; returns the best-validation checkpoint.

    Without ``val_series`` the last training epoch is returned. Hidden state is
    carried across windows but gradients are cut at window boundaries.
    """
    config = config or model.config
    model = model.copy()
    model.config = config
    if profile is not None:
        model.profile = profile
    L = model.topology.L
    if len(series) < config.time_steps + L:
        raise DataError(f"training series ({len(series)} frames) shorter than time_steps + L "
                        f"= {config.time_steps + L}")
    X = model.inputs(series)
    Y, mask = targets(series.values, L)
    params = model.parameters()
    opt = Adam(params, lr=config.learning_rate, weight_decay=config.weight_decay)
    report = TrainingReport()
    best, best_score, since_best = None, math.inf, 0
    t_start = time.perf_counter()
    T = config.time_steps
    for epoch in range(1, config.max_epochs + 1):
        h = [np.zeros(model.topology.hidden_width) for _ in model.layers]
        total, count = 0.0, 0
        for s in range(0, len(X), T):
            e = min(s + T, len(X))
            if not mask[s:e].any():
                # nothing to fit; still advance the hidden state
                _, _, h = sequence_loss_and_grads(model, X[s:e], Y[s:e], mask[s:e], h)
                continue
            loss, grads, h = sequence_loss_and_grads(model, X[s:e], Y[s:e], mask[s:e], h)
            if not math.isfinite(loss):
                raise DivergenceError(epoch)
            opt.step(grads)
            w = int(mask[s:e].sum())
            total += loss * w
            count += w
        epoch_loss = total / count
        report.train_loss.append(epoch_loss)
        report.epochs = epoch
        if val_series is not None:
            score = evaluate_mse(model, val_series, warmup=series)
            report.val_mse.append(score)
        else:
            score = epoch_loss
        if not math.isfinite(score):
            raise DivergenceError(epoch, "validation MSE became NaN")
        if score < best_score:
            best_score, since_best = score, 0
            best = [p.copy() for p in params]
            report.best_epoch = epoch
        else:
            since_best += 1
        log.debug("epoch %d loss %.6g val %.6g", epoch, epoch_loss, score)
        if config.patience is not None and since_best >= config.patience:
            break
    for p, b in zip(params, best):
        p[...] = b
    report.wall_time = time.perf_counter() - t_start
    model.report = report
    model.reset()
    return model
