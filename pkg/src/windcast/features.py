"""Six-feature supervised rows, min-max scaling and train/validation/test splits."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateColumn, DimensionMismatch, SchemaMismatch, TooFewRows
from .ingest import ObservationSeries, _parse_timestamp, format_timestamp

FEATURE_NAMES = (
    "temperature",
    "pressure",
    "wind_speed",
    "pressure_delta",
    "wind_speed_delta",
    "temperature_delta",
)
N_FEATURES = len(FEATURE_NAMES)
SPLITS = ("train", "validation", "test")
DEFAULT_FRACTIONS = (0.70, 0.15, 0.15)


class FeatureRow(NamedTuple):
    timestamp: int
    temperature: float
    pressure: float
    wind_speed: float
    pressure_delta: float
    wind_speed_delta: float
    temperature_delta: float
    target_wind_speed: float
    segment: int


@dataclass(frozen=True)
class FeatureRows:
    """Column store of :class:`FeatureRow` values, in chronological order.

    ``features`` columns follow :data:`FEATURE_NAMES`; ``segment`` holds the
    index of the contiguous segment each row was built from.
    """

    timestamps: np.ndarray
    features: np.ndarray
    target: np.ndarray
    segment: np.ndarray

    def __post_init__(self):
        n = len(self.timestamps)
        if self.features.shape != (n, N_FEATURES) or self.target.shape != (n,) or self.segment.shape != (n,):
            raise DimensionMismatch("feature table columns disagree in length")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, i: int) -> FeatureRow:
        return FeatureRow(int(self.timestamps[i]), *map(float, self.features[i]),
                          float(self.target[i]), int(self.segment[i]))

    def take(self, index) -> "FeatureRows":
        return FeatureRows(self.timestamps[index], self.features[index], self.target[index], self.segment[index])


def build_rows(segments: Sequence[ObservationSeries]) -> FeatureRows:
    """One row per interior step of each segment.

    Row i of a segment uses observation i as the feature time, i-1 for the
    one-step deltas, and the wind speed at i+1 as target, so a segment of
    length L contributes max(0, L-2) rows.
    """
    ts, feats, target, seg = [], [], [], []
    for s_id, s in enumerate(segments):
        if len(s) < 3:
            continue
        T, P, W = s.air_temperature, s.air_pressure, s.wind_speed
        cur = slice(1, -1)
        ts.append(s.timestamps[cur])
        feats.append(np.column_stack([
            T[cur], P[cur], W[cur],
            P[1:-1] - P[:-2],
            W[1:-1] - W[:-2],
            T[1:-1] - T[:-2],
        ]))
        target.append(W[2:])
        seg.append(np.full(len(s) - 2, s_id, dtype=np.int64))
    if not ts:
        return FeatureRows(np.empty(0, np.int64), np.empty((0, N_FEATURES)), np.empty(0), np.empty(0, np.int64))
    return FeatureRows(np.concatenate(ts), np.vstack(feats), np.concatenate(target), np.concatenate(seg))


@dataclass(frozen=True)
class Scaler:
    """Per-column affine map of the training range onto [-1, 1]."""

    feature_min: np.ndarray
    feature_max: np.ndarray
    target_min: float
    target_max: float

    def __post_init__(self):
        if np.any(self.feature_max <= self.feature_min) or not self.target_max > self.target_min:
            raise DegenerateColumn("scaler needs max > min for every column")

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.shape[-1] != len(self.feature_min):
            raise DimensionMismatch(f"expected {len(self.feature_min)} feature columns, got {features.shape[-1]}")
        return 2.0 * (features - self.feature_min) / (self.feature_max - self.feature_min) - 1.0

    def transform_target(self, y):
        return 2.0 * (np.asarray(y, dtype=np.float64) - self.target_min) / (self.target_max - self.target_min) - 1.0

    def inverse_target(self, scaled):
        return (np.asarray(scaled, dtype=np.float64) + 1.0) * 0.5 * (self.target_max - self.target_min) + self.target_min

    def to_dict(self) -> dict:
        return {
            "feature_names": list(FEATURE_NAMES[: len(self.feature_min)]),
            "feature_min": self.feature_min.tolist(),
            "feature_max": self.feature_max.tolist(),
            "target_min": float(self.target_min),
            "target_max": float(self.target_max),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["feature_min"], dtype=np.float64), np.asarray(d["feature_max"], dtype=np.float64),
                   float(d["target_min"]), float(d["target_max"]))


def fit_scaler(rows: FeatureRows) -> Scaler:
    if len(rows) < 2:
        raise TooFewRows("fitting a scaler needs at least 2 rows")
    lo, hi = rows.features.min(axis=0), rows.features.max(axis=0)
    flat = [FEATURE_NAMES[j] for j in np.flatnonzero(hi <= lo)]
    if rows.target.max() <= rows.target.min():
        flat.append("target_wind_speed")
    if flat:
        raise DegenerateColumn(f"constant column(s) on the training split: {flat}")
    return Scaler(lo, hi, float(rows.target.min()), float(rows.target.max()))


@dataclass(frozen=True)
class SupervisedDataset:
    rows: FeatureRows
    labels: np.ndarray  # 0 train, 1 validation, 2 test
    scaler: Scaler

    def mask(self, split: str) -> np.ndarray:
        return self.labels == SPLITS.index(split)

    def count(self, split: str) -> int:
        return int(np.count_nonzero(self.mask(split)))

    def scaled_features(self) -> np.ndarray:
        return self.scaler.transform(self.rows.features)

    def scaled_target(self) -> np.ndarray:
        return self.scaler.transform_target(self.rows.target)

    def split_hash(self) -> str:
        return hashlib.sha256(self.labels.astype(np.int8).tobytes()).hexdigest()


def _split_counts(n: int, fractions) -> tuple[int, int, int]:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or min(fractions) <= 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three positive numbers summing to 1, got {fractions}")
    n_train = int(np.floor(fractions[0] * n))
    n_val = int(np.floor(fractions[1] * n))
    counts = (n_train, n_val, n - n_train - n_val)
    if min(counts) < 1:
        raise TooFewRows(f"{n} rows cannot fill splits {fractions} (counts {counts})")
    return counts


def split_chronological(rows: FeatureRows, fractions=DEFAULT_FRACTIONS) -> SupervisedDataset:
    n_train, n_val, _ = _split_counts(len(rows), fractions)
    labels = np.full(len(rows), 2, dtype=np.int64)
    labels[:n_train] = 0
    labels[n_train:n_train + n_val] = 1
    return SupervisedDataset(rows, labels, fit_scaler(rows.take(labels == 0)))


def split_shuffled(rows: FeatureRows, fractions=DEFAULT_FRACTIONS, seed: int = 0) -> SupervisedDataset:
    """Random split with the same counts as :func:`split_chronological`.
    Rows stay in time order; only the labels are permuted."""
    n_train, n_val, _ = _split_counts(len(rows), fractions)
    order = np.random.default_rng(seed).permutation(len(rows))
    labels = np.full(len(rows), 2, dtype=np.int64)
    labels[order[:n_train]] = 0
    labels[order[n_train:n_train + n_val]] = 1
    return SupervisedDataset(rows, labels, fit_scaler(rows.take(labels == 0)))


DATASET_COLUMNS = ("timestamp", "segment", *FEATURE_NAMES, "target_wind_speed", "split")


def dataset_to_csv(ds: SupervisedDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DATASET_COLUMNS)
    r = ds.rows
    for i in range(len(r)):
        w.writerow([format_timestamp(r.timestamps[i]), int(r.segment[i]),
                    *(repr(float(v)) for v in r.features[i]), repr(float(r.target[i])),
                    SPLITS[ds.labels[i]]])
    return buf.getvalue()


def dataset_from_csv(text: str, scaler: Scaler | None = None) -> SupervisedDataset:
    """Inverse of :func:`dataset_to_csv`. The scaler is refit on the train
    rows unless one is supplied (e.g. from a persisted model)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != DATASET_COLUMNS:
        raise SchemaMismatch(f"dataset CSV header must be {','.join(DATASET_COLUMNS)}")
    ts, seg, feats, target, labels = [], [], [], [], []
    for row in reader:
        if not row:
            continue
        ts.append(_parse_timestamp(row[0]))
        seg.append(int(row[1]))
        feats.append([float(v) for v in row[2:2 + N_FEATURES]])
        target.append(float(row[2 + N_FEATURES]))
        labels.append(SPLITS.index(row[3 + N_FEATURES]))
    rows = FeatureRows(np.asarray(ts, np.int64), np.asarray(feats, np.float64).reshape(-1, N_FEATURES),
                       np.asarray(target, np.float64), np.asarray(seg, np.int64))
    labels = np.asarray(labels, np.int64)
    if scaler is None:
        scaler = fit_scaler(rows.take(labels == 0))
    return SupervisedDataset(rows, labels, scaler)
