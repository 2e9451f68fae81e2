"""Forecast scores: mean squared error and the regression coefficient R."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyVectors, LengthMismatch, ZeroVariance


def _pair(expected, predicted) -> tuple[np.ndarray, np.ndarray]:
    e = np.asarray(expected, dtype=np.float64).ravel()
    o = np.asarray(predicted, dtype=np.float64).ravel()
    if e.shape != o.shape:
        raise LengthMismatch(f"expected has {e.size} values, predicted has {o.size}")
    if e.size == 0:
        raise EmptyVectors("cannot score empty vectors")
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(o))):
        raise ValueError("non-finite values in metric input")
    return e, o


def mse(expected, predicted) -> float:
    """Mean of squared differences, accumulated in index order."""
    e, o = _pair(expected, predicted)
    d = e - o
    return float(np.cumsum(d * d)[-1] / d.size)


def regression_r(expected, predicted) -> float:
    """Pearson correlation between measured and predicted values.

    Two-pass: centre on the sample means, then form the cross and squared
    moments. Raises :class:`ZeroVariance` if either input is constant.
    """
    e, o = _pair(expected, predicted)
    if e.size < 2:
        raise EmptyVectors("R needs at least two samples")
    de = e - e.sum() / e.size
    do = o - o.sum() / o.size
    see = float(np.dot(de, de))
    soo = float(np.dot(do, do))
    if see == 0.0 or soo == 0.0:
        raise ZeroVariance("R is undefined when either series is constant")
    # sqrt of the product keeps R(e, e) == 1 exactly; fall back on overflow
    denom = math.sqrt(see * soo)
    if not math.isfinite(denom) or denom == 0.0:
        denom = math.sqrt(see) * math.sqrt(soo)
    r = float(np.dot(de, do)) / denom
    return float(min(1.0, max(-1.0, r)))


@dataclass(frozen=True)
class EvalMetrics:
    mse: float
    r: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(expected, predicted) -> EvalMetrics:
    e, o = _pair(expected, predicted)
    return EvalMetrics(mse=mse(e, o), r=regression_r(e, o), n=int(e.size))
