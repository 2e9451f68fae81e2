"""NARX network: one tanh hidden layer over tapped delay lines, linear output.

The input window for feature row t stacks the six scaled features at lags
0..d_x followed by the measured (scaled) targets of rows t-1..t-d_y, i.e.
the series-parallel form. Windows never reach across a segment boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, EmptySplit, NonFiniteLoss
from .features import N_FEATURES, Scaler, SupervisedDataset
from .trace import TrainTrace

FORMAT = "windcast.narx"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class NarxConfig:
    hidden_neurons: int = 50
    exogenous_delay: int = 2
    autoregressive_delay: int = 2
    hidden_activation: str = "tanh"
    output_activation: str = "linear"
    step_size: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_epochs: int = 2000
    patience: int = 25
    rng_seed: int = 0
    n_exogenous: int = N_FEATURES

    def __post_init__(self):
        if self.hidden_neurons < 1 or self.max_epochs < 1:
            raise ValueError("hidden_neurons and max_epochs must be >= 1")
        if self.exogenous_delay < 0 or self.autoregressive_delay < 0:
            raise ValueError("delays must be non-negative")
        if self.hidden_activation != "tanh" or self.output_activation != "linear":
            raise ValueError("only tanh hidden / linear output layers are implemented")

    @property
    def input_width(self) -> int:
        return self.n_exogenous * (self.exogenous_delay + 1) + self.autoregressive_delay

    @property
    def max_lag(self) -> int:
        return max(self.exogenous_delay, self.autoregressive_delay)


class NarxWeights(NamedTuple):
    w_hidden: np.ndarray  # (H, width)
    b_hidden: np.ndarray  # (H,)
    w_output: np.ndarray  # (1, H)
    b_output: np.ndarray  # (1,)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self])

    @classmethod
    def unflat(cls, vec, like: "NarxWeights") -> "NarxWeights":
        out, i = [], 0
        for a in like:
            out.append(np.asarray(vec[i:i + a.size]).reshape(a.shape))
            i += a.size
        return cls(*out)


@dataclass(frozen=True)
class NarxModel:
    weights: NarxWeights
    config: NarxConfig = field(default_factory=NarxConfig)
    scaler: Scaler | None = None

    def __post_init__(self):
        H, width = self.config.hidden_neurons, self.config.input_width
        shapes = ((H, width), (H,), (1, H), (1,))
        if tuple(a.shape for a in self.weights) != shapes:
            raise DimensionMismatch(f"weights {[a.shape for a in self.weights]} do not match config {shapes}")

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "format_version": FORMAT_VERSION,
            "config": asdict(self.config),
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
            "w_hidden": self.weights.w_hidden.tolist(),
            "b_hidden": self.weights.b_hidden.tolist(),
            "w_output": self.weights.w_output.tolist(),
            "b_output": self.weights.b_output.tolist(),
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NarxModel":
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise DimensionMismatch(f"not a NARX model file (format={doc.get('format')!r})")
        w = NarxWeights(*(np.asarray(doc[k], dtype=np.float64) for k in ("w_hidden", "b_hidden", "w_output", "b_output")))
        scaler = None if doc["scaler"] is None else Scaler.from_dict(doc["scaler"])
        return cls(w, NarxConfig(**doc["config"]), scaler)


def init(config: NarxConfig, scaler: Scaler | None = None) -> NarxModel:
    """Uniform fan-in scaled weights, zero biases."""
    rng = np.random.default_rng(config.rng_seed)
    H, width = config.hidden_neurons, config.input_width
    a_in, a_out = 1.0 / math.sqrt(width), 1.0 / math.sqrt(H)
    w = NarxWeights(
        rng.uniform(-a_in, a_in, size=(H, width)),
        np.zeros(H),
        rng.uniform(-a_out, a_out, size=(1, H)),
        np.zeros(1),
    )
    return NarxModel(w, config, scaler)


def _forward(w: NarxWeights, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = np.tanh(Z @ w.w_hidden.T + w.b_hidden)
    return h, h @ w.w_output[0] + w.b_output[0]


def _windows_2d(model: NarxModel, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.ndim != 2 or Z.shape[1] != model.config.input_width:
        raise DimensionMismatch(f"NARX window width must be {model.config.input_width}, got shape {Z.shape}")
    return Z


def forward(model: NarxModel, window) -> float:
    """Scaled prediction for one scaled window."""
    Z = _windows_2d(model, window)
    if Z.shape[0] != 1:
        raise DimensionMismatch("forward takes a single window")
    return float(_forward(model.weights, Z)[1][0])


def forward_batch(model: NarxModel, Z) -> np.ndarray:
    return _forward(model.weights, _windows_2d(model, Z))[1]


class Windows(NamedTuple):
    inputs: np.ndarray  # (M, width), scaled
    target: np.ndarray  # (M,), scaled
    row: np.ndarray  # (M,) index of the feature row each window predicts for


def window_rows(segment: np.ndarray, config: NarxConfig) -> np.ndarray:
    """Rows that have every lag inside their own segment."""
    seg = np.asarray(segment)
    n = len(seg)
    lag = config.max_lag
    idx = np.arange(lag, n)
    if lag == 0:
        return np.arange(n)
    return idx[seg[idx - lag] == seg[idx]]


def build_windows(X, y, segment, config: NarxConfig) -> Windows:
    """Windows from scaled features ``X`` (rows, n_exogenous) and scaled
    targets ``y``; rows are assumed chronological within each segment."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != config.n_exogenous:
        raise DimensionMismatch(f"NARX expects {config.n_exogenous} exogenous inputs, got shape {X.shape}")
    rows = window_rows(segment, config)
    cols = [X[rows - lag] for lag in range(config.exogenous_delay + 1)]
    cols += [y[rows - lag][:, None] for lag in range(1, config.autoregressive_delay + 1)]
    inputs = np.hstack(cols) if cols else np.empty((len(rows), 0))
    return Windows(inputs.reshape(len(rows), config.input_width), y[rows], rows)


def assemble_windows(dataset: SupervisedDataset, config: NarxConfig) -> Windows:
    return build_windows(dataset.scaled_features(), dataset.scaled_target(), dataset.rows.segment, config)


def loss(weights: NarxWeights, Z, t) -> float:
    return float(np.mean((_forward(weights, Z)[1] - t) ** 2))


def gradient(model: NarxModel | NarxWeights, Z, t) -> NarxWeights:
    """Analytic gradient of the batch MSE, shaped like the weights."""
    w = model.weights if isinstance(model, NarxModel) else model
    Z = np.asarray(Z, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != w.w_hidden.shape[1] or len(t) != len(Z):
        raise DimensionMismatch(f"batch shape {Z.shape} / {t.shape} does not fit the network")
    if len(Z) == 0:
        raise EmptySplit("gradient of an empty batch")
    h, out = _forward(w, Z)
    g_out = 2.0 * (out - t) / len(t)
    g_pre = np.outer(g_out, w.w_output[0]) * (1.0 - h * h)
    return NarxWeights(g_pre.T @ Z, g_pre.sum(axis=0), (g_out @ h)[None, :], np.array([g_out.sum()]))


def train(model: NarxModel, dataset: SupervisedDataset, config: NarxConfig | None = None):
    """Full-batch Adam with early stopping on validation MSE.

    Returns the weights of the best validation epoch and the trace.
    """
    if config is not None:
        model = replace(model, config=config)
    win = assemble_windows(dataset, model.config)
    labels = dataset.labels[win.row]
    tr, va = labels == 0, labels == 1
    if not tr.any():
        raise EmptySplit("NARX training split has no complete windows")
    if not va.any():
        raise EmptySplit("NARX validation split has no complete windows")
    weights, trace = fit_adam(model.weights, model.config, win.inputs[tr], win.target[tr],
                              win.inputs[va], win.target[va])
    return NarxModel(weights, model.config, dataset.scaler), trace


def fit_adam(weights: NarxWeights, cfg: NarxConfig, Z_tr, t_tr, Z_va, t_va) -> tuple[NarxWeights, TrainTrace]:
    params = [a.copy() for a in weights]
    m1 = [np.zeros_like(a) for a in params]
    m2 = [np.zeros_like(a) for a in params]
    trace = TrainTrace()
    best, best_val, since_best = NarxWeights(*[a.copy() for a in params]), math.inf, 0
    b1, b2 = cfg.beta1, cfg.beta2
    for epoch in range(1, cfg.max_epochs + 1):
        w = NarxWeights(*params)
        grads = gradient(w, Z_tr, t_tr)
        for p, g, m, v in zip(params, grads, m1, m2):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= cfg.step_size * (m / (1.0 - b1 ** epoch)) / (np.sqrt(v / (1.0 - b2 ** epoch)) + cfg.epsilon)
        w = NarxWeights(*params)
        train_mse, val_mse = loss(w, Z_tr, t_tr), loss(w, Z_va, t_va)
        if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
            raise NonFiniteLoss(f"NARX loss became non-finite at epoch {epoch}")
        trace.record(train_mse, val_mse, cfg.step_size)
        if val_mse < best_val:
            best = NarxWeights(*[a.copy() for a in params])
            best_val, since_best, trace.best_epoch = val_mse, 0, epoch
        else:
            since_best += 1
            if since_best >= cfg.patience:
                trace.stopped_early = True
                break
    return best, trace


def scale_windows(scaler: Scaler, raw, config: NarxConfig) -> np.ndarray:
    """Scale raw (physical-unit) windows laid out like :func:`build_windows`."""
    raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
    if raw.shape[1] != config.input_width:
        raise DimensionMismatch(f"NARX window width must be {config.input_width}, got {raw.shape[1]}")
    n_ex = config.n_exogenous * (config.exogenous_delay + 1)
    ex = raw[:, :n_ex].reshape(len(raw), config.exogenous_delay + 1, config.n_exogenous)
    scaled_ex = scaler.transform(ex).reshape(len(raw), n_ex)
    return np.hstack([scaled_ex, scaler.transform_target(raw[:, n_ex:])])


def predict_windows(model: NarxModel, raw_windows) -> np.ndarray:
    """Wind speed (m/s) for raw windows: scale, forward, unscale."""
    if model.scaler is None:
        raise DimensionMismatch("model has no scaler; train it on a dataset first")
    raw = np.asarray(raw_windows, dtype=np.float64)
    out = model.scaler.inverse_target(forward_batch(model, scale_windows(model.scaler, raw, model.config)))
    return out[0] if raw.ndim == 1 else out


def predict(model: NarxModel, dataset: SupervisedDataset) -> tuple[np.ndarray, np.ndarray]:
    """Predictions (m/s) for every dataset row with a complete window, and
    the indices of those rows. The model's own scaler is used."""
    if model.scaler is None:
        raise DimensionMismatch("model has no scaler; train it on a dataset first")
    X = model.scaler.transform(dataset.rows.features)
    y = model.scaler.transform_target(dataset.rows.target)
    win = build_windows(X, y, dataset.rows.segment, model.config)
    return model.scaler.inverse_target(forward_batch(model, win.inputs)), win.row
