"""First-order Sugeno ANFIS on a grid-partitioned rule base.

Each of the ``n`` scaled inputs carries ``m`` Gaussian membership functions;
the rule base is the full Cartesian product of MF indices (``m**n`` rules,
lexicographic, last input varying fastest). Rule ``r`` fires with the
product of its memberships and outputs ``p_r . x + r_r``; the model output
is the firing-strength-weighted average of the rule outputs.

Training is the hybrid scheme: every epoch solves the consequents by
recursive least squares with the premise frozen, then takes one normalized
gradient step on the centres and widths.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import kernels
from .errors import AllRulesSilent, DegenerateColumn, DimensionMismatch, EmptySplit, NonFiniteLoss
from .features import Scaler, SupervisedDataset
from .rls import rls_solve
from .trace import TrainTrace

FORMAT = "windcast.anfis"
FORMAT_VERSION = 1
SILENT_THRESHOLD = 1e-300
_LOG_SILENT = math.log(SILENT_THRESHOLD)


@dataclass(frozen=True)
class AnfisConfig:
    n_inputs: int = 6
    mfs_per_input: int = 3
    consequent_order: str = "first"
    step_size: float = 0.01
    step_increase: float = 1.1
    step_decrease: float = 0.9
    max_epochs: int = 50
    patience: int = 10
    sigma_floor: float = 1e-4
    lse_gamma: float = 1e6
    lse_form: str = "information"
    lse_block: int = 512

    def __post_init__(self):
        if self.n_inputs < 1 or self.mfs_per_input < 1:
            raise ValueError("n_inputs and mfs_per_input must be positive")
        if self.consequent_order != "first":
            raise ValueError("only first-order consequents are supported")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")

    @property
    def n_rules(self) -> int:
        return self.mfs_per_input ** self.n_inputs


def grid_rules(n_inputs: int, mfs_per_input: int) -> np.ndarray:
    return np.array(list(itertools.product(range(mfs_per_input), repeat=n_inputs)), dtype=np.int64)


def gaussian_mf(x, center, sigma):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-((x - center) ** 2) / (2.0 * sigma * sigma))


@dataclass(frozen=True)
class AnfisModel:
    centers: np.ndarray  # (n, m)
    sigmas: np.ndarray  # (n, m)
    consequents: np.ndarray  # (m**n, n + 1); last column is the constant
    config: AnfisConfig = field(default_factory=AnfisConfig)
    scaler: Scaler | None = None

    def __post_init__(self):
        n, m = self.config.n_inputs, self.config.mfs_per_input
        if self.centers.shape != (n, m) or self.sigmas.shape != (n, m):
            raise DimensionMismatch(f"premise grid must be {n}x{m}")
        if self.consequents.shape != (m ** n, n + 1):
            raise DimensionMismatch(f"consequents must be {m ** n}x{n + 1}, got {self.consequents.shape}")

    @property
    def rules(self) -> np.ndarray:
        return grid_rules(self.config.n_inputs, self.config.mfs_per_input)

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "format_version": FORMAT_VERSION,
            "config": asdict(self.config),
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
            "centers": self.centers.tolist(),
            "sigmas": self.sigmas.tolist(),
            "consequents": self.consequents.tolist(),
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "AnfisModel":
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise DimensionMismatch(f"not an ANFIS model file (format={doc.get('format')!r})")
        config = AnfisConfig(**doc["config"])
        scaler = None if doc["scaler"] is None else Scaler.from_dict(doc["scaler"])
        return cls(np.asarray(doc["centers"], dtype=np.float64), np.asarray(doc["sigmas"], dtype=np.float64),
                   np.asarray(doc["consequents"], dtype=np.float64).reshape(config.n_rules, config.n_inputs + 1),
                   config, scaler)


def init_premise(config: AnfisConfig, X) -> tuple[np.ndarray, np.ndarray]:
    """Centres equally spaced over each column's range; widths set so that
    neighbouring MFs cross at exp(-1/2) ~ 0.61."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != config.n_inputs:
        raise DimensionMismatch(f"expected (rows, {config.n_inputs}) inputs, got {X.shape}")
    lo, hi = X.min(axis=0), X.max(axis=0)
    if np.any(hi <= lo):
        raise DegenerateColumn(f"constant input column(s) {np.flatnonzero(hi <= lo).tolist()}")
    m = config.mfs_per_input
    if m == 1:
        centers = ((lo + hi) / 2)[:, None]
        sigmas = ((hi - lo) / 2)[:, None]
    else:
        centers = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, m)[None, :]
        sigmas = np.repeat(((hi - lo) / (2 * (m - 1)))[:, None], m, axis=1)
    return centers, sigmas


def init_model(config: AnfisConfig, X, scaler: Scaler | None = None) -> AnfisModel:
    centers, sigmas = init_premise(config, X)
    return AnfisModel(centers, sigmas, np.zeros((config.n_rules, config.n_inputs + 1)), config, scaler)


def _check_inputs(model: AnfisModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.config.n_inputs:
        raise DimensionMismatch(f"ANFIS expects {model.config.n_inputs} inputs per row, got shape {X.shape}")
    return np.ascontiguousarray(X)


def _firing(model: AnfisModel, X, rules=None):
    if rules is None:
        rules = model.rules
    wbar, log_total = kernels.normalized_firing(X, model.centers, model.sigmas, rules)
    return wbar, log_total >= _LOG_SILENT


def firing_strengths(model: AnfisModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Raw and normalized firing strengths of every rule for one input."""
    X = _check_inputs(model, x)
    if X.shape[0] != 1:
        raise DimensionMismatch("firing_strengths takes a single input vector")
    wbar, ok = _firing(model, X)
    if not ok[0]:
        raise AllRulesSilent("total firing strength below 1e-300", rows=[0])
    mu = gaussian_mf(X[0][:, None], model.centers, model.sigmas)
    w = np.ones(1)
    for j in range(model.config.n_inputs):
        w = (w[:, None] * mu[j][None, :]).ravel()
    return w, wbar[0]


def _augment(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _outputs(model: AnfisModel, X, wbar):
    F = _augment(X) @ model.consequents.T
    return F, np.einsum("tr,tr->t", wbar, F)


def forward_batch(model: AnfisModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Scaled outputs for every row plus the non-silent mask; silent rows
    hold NaN."""
    X = _check_inputs(model, X)
    wbar, ok = _firing(model, X)
    _, y = _outputs(model, X, wbar)
    y[~ok] = np.nan
    return y, ok


def anfis_forward(model: AnfisModel, x) -> float:
    y, ok = forward_batch(model, x)
    if not ok[0]:
        raise AllRulesSilent("total firing strength below 1e-300", rows=[0])
    return float(y[0])


def solve_consequents_lse(model: AnfisModel, X, y) -> tuple[AnfisModel, int]:
    """Least-squares consequents for a frozen premise.

    Returns the updated model and the number of silent rows skipped.
    """
    X = _check_inputs(model, X)
    y = np.asarray(y, dtype=np.float64)
    if len(X) == 0 or len(X) != len(y):
        raise DimensionMismatch("LSE needs matching, non-empty inputs and targets")
    wbar, ok = _firing(model, X)
    skipped = int(np.count_nonzero(~ok))
    if skipped:
        wbar, X, y = wbar[ok], X[ok], y[ok]
    if len(X) == 0:
        raise AllRulesSilent("every training row is silent", rows=np.flatnonzero(~ok))
    A = kernels.design_matrix(wbar, X)
    cfg = model.config
    theta = rls_solve(A, y, gamma=cfg.lse_gamma, block=cfg.lse_block, form=cfg.lse_form)
    return replace(model, consequents=theta.reshape(cfg.n_rules, cfg.n_inputs + 1)), skipped


def premise_gradient(model: AnfisModel, X, y) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the batch MSE w.r.t. (centres, widths)."""
    X = _check_inputs(model, X)
    y = np.asarray(y, dtype=np.float64)
    if len(X) == 0:
        raise EmptySplit("premise gradient of an empty batch")
    rules = model.rules
    wbar, ok = _firing(model, X, rules)
    if not ok.all():
        raise AllRulesSilent("silent rows in gradient batch", rows=np.flatnonzero(~ok))
    F, out = _outputs(model, X, wbar)
    coef = 2.0 * (out - y) / len(y)
    return kernels.premise_grad(X, model.centers, model.sigmas, wbar, F, out, coef, rules)


def adapt_step(errors: list[float], step: float, increase: float = 1.1, decrease: float = 0.9) -> float:
    """Step-size heuristic: grow after four straight error reductions,
    shrink after two consecutive increase/reduction pairs."""
    if len(errors) < 5:
        return step
    d = np.sign(np.diff(errors[-5:]))
    if np.all(d < 0):
        return step * increase
    if d[0] > 0 and d[1] < 0 and d[2] > 0 and d[3] < 0:
        return step * decrease
    return step


def _masked_mse(model, X, y, rules):
    if len(X) == 0:
        return math.nan, 0
    wbar, ok = _firing(model, X, rules)
    _, out = _outputs(model, X[ok], wbar[ok])
    return float(np.mean((out - y[ok]) ** 2)) if ok.any() else math.nan, int(np.count_nonzero(~ok))


def fit_hybrid(model: AnfisModel, X_train, y_train, X_val=None, y_val=None) -> tuple[AnfisModel, TrainTrace]:
    """Hybrid training on scaled arrays.

    With an empty validation set the final epoch's model is returned;
    otherwise the model from the epoch with the lowest validation MSE.
    """
    cfg = model.config
    X_train = _check_inputs(model, X_train)
    y_train = np.asarray(y_train, dtype=np.float64)
    if len(X_train) == 0:
        raise EmptySplit("ANFIS training split is empty")
    has_val = X_val is not None and len(X_val) > 0
    if has_val:
        X_val = _check_inputs(model, X_val)
        y_val = np.asarray(y_val, dtype=np.float64)

    rules = model.rules
    trace = TrainTrace()
    step = cfg.step_size
    best, best_val, since_best = model, math.inf, 0
    for epoch in range(1, cfg.max_epochs + 1):
        model, skipped = solve_consequents_lse(model, X_train, y_train)
        trace.skipped_rows = max(trace.skipped_rows, skipped)

        wbar, ok = _firing(model, X_train, rules)
        Xt, yt, wbar = X_train[ok], y_train[ok], wbar[ok]
        F, out = _outputs(model, Xt, wbar)
        train_mse = float(np.mean((out - yt) ** 2))
        val_mse = _masked_mse(model, X_val, y_val, rules)[0] if has_val else math.nan
        if not math.isfinite(train_mse) or (has_val and not math.isfinite(val_mse)):
            raise NonFiniteLoss(f"ANFIS loss became non-finite at epoch {epoch}")
        trace.record(train_mse, val_mse, step)

        if not has_val:
            best, trace.best_epoch = model, epoch
        elif val_mse < best_val:
            best, best_val, since_best, trace.best_epoch = model, val_mse, 0, epoch
        else:
            since_best += 1
            if since_best >= cfg.patience:
                trace.stopped_early = True
                break
        if epoch == cfg.max_epochs:
            break

        coef = 2.0 * (out - yt) / len(yt)
        gc, gs = kernels.premise_grad(Xt, model.centers, model.sigmas, wbar, F, out, coef, rules)
        norm = math.sqrt(float(np.sum(gc * gc) + np.sum(gs * gs)))
        if norm > 0.0:
            centers = model.centers - step * gc / norm
            sigmas = np.maximum(model.sigmas - step * gs / norm, cfg.sigma_floor)
            model = replace(model, centers=centers, sigmas=sigmas)
        step = adapt_step(trace.train_mse, step, cfg.step_increase, cfg.step_decrease)

    return best, trace


def train_hybrid(model: AnfisModel, dataset: SupervisedDataset, config: AnfisConfig | None = None):
    if config is not None:
        model = replace(model, config=config)
    X = dataset.scaled_features()
    y = dataset.scaled_target()
    tr, va = dataset.mask("train"), dataset.mask("validation")
    best, trace = fit_hybrid(model, X[tr], y[tr], X[va], y[va])
    return replace(best, scaler=dataset.scaler), trace


def anfis_predict(model: AnfisModel, features) -> np.ndarray:
    """Wind speed (m/s) for raw, unscaled feature rows."""
    if model.scaler is None:
        raise DimensionMismatch("model has no scaler; train it on a dataset first")
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 1
    y, ok = forward_batch(model, model.scaler.transform(np.atleast_2d(features)))
    if not ok.all():
        bad = np.flatnonzero(~ok)
        raise AllRulesSilent(f"total firing strength below 1e-300 at row(s) {bad.tolist()[:10]}", rows=bad)
    out = model.scaler.inverse_target(y)
    return out[0] if single else out
