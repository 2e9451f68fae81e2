"""End-to-end experiment: ingest, build features, train both models on the
same split, score them, and write the comparison artifacts.

Output directory layout::

    report.json  report.txt  dataset.csv
    narx_model.json  anfis_model.json
    trace_narx.csv  trace_anfis.csv
    scatter_{narx,anfis}_{train,validation,test}.csv
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import anfis, kernels, narx
from .errors import DataError, WindcastError
from .features import (
    DEFAULT_FRACTIONS, SPLITS, SupervisedDataset, build_rows, dataset_to_csv,
    split_chronological, split_shuffled,
)
from .ingest import (
    DEFAULT_CADENCE, MIN_SEGMENT_LENGTH, ObservationSeries, format_timestamp,
    generate_synthetic, ingest_summary, read_csv, validate_cadence,
)
from .metrics import EvalMetrics, evaluate

CONFIG_VERSION = 1
REPORT_VERSION = 1
MODELS = ("narx", "anfis")

FAIRNESS_NOTE = (
    "Both models are trained on the same scaled dataset and split assignment, "
    "and scored on the same rows: those with a complete NARX delay window."
)


@dataclass
class ExperimentConfig:
    csv_path: str | None = None
    synthetic: dict | None = None  # {"seed": int, "n": int, "regime": str}
    cadence_seconds: int = DEFAULT_CADENCE
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    shuffled: bool = False
    shuffle_seed: int = 0
    narx: narx.NarxConfig = field(default_factory=narx.NarxConfig)
    anfis: anfis.AnfisConfig = field(default_factory=anfis.AnfisConfig)
    output_dir: str = "windcast-out"
    format_version: int = CONFIG_VERSION

    def validate(self) -> None:
        if (self.csv_path is None) == (self.synthetic is None):
            raise DataError("experiment config needs exactly one data source (csv_path or synthetic)")
        if self.csv_path is not None and not Path(self.csv_path).is_file():
            raise DataError(f"data file {self.csv_path} not found")
        if self.format_version != CONFIG_VERSION:
            raise DataError(f"unsupported config format_version {self.format_version}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fractions"] = list(self.fractions)
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | os.PathLike | None = None) -> "ExperimentConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown experiment config key(s): {sorted(unknown)}")
        if d.get("csv_path") and base_dir is not None and not os.path.isabs(d["csv_path"]):
            d["csv_path"] = str(Path(base_dir) / d["csv_path"])
        if "fractions" in d:
            d["fractions"] = tuple(d["fractions"])
        d["narx"] = narx.NarxConfig(**d.get("narx", {}))
        d["anfis"] = anfis.AnfisConfig(**d.get("anfis", {}))
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), base_dir=Path(path).parent)


def load_series(cfg: ExperimentConfig) -> ObservationSeries:
    if cfg.csv_path is not None:
        return read_csv(cfg.csv_path, cadence_seconds=cfg.cadence_seconds)
    syn = cfg.synthetic
    return generate_synthetic(int(syn["seed"]), int(syn["n"]), syn.get("regime", "mixed"), cfg.cadence_seconds)


def make_dataset(series: ObservationSeries, fractions=DEFAULT_FRACTIONS, shuffled=False, shuffle_seed=0):
    seg = validate_cadence(series, MIN_SEGMENT_LENGTH)
    rows = build_rows(seg.segments)
    if shuffled:
        return split_shuffled(rows, fractions, shuffle_seed), seg
    return split_chronological(rows, fractions), seg


def eval_rows(dataset: SupervisedDataset, lag: int) -> np.ndarray:
    """Rows whose first ``lag`` predecessors lie in the same segment."""
    seg = dataset.rows.segment
    idx = np.arange(lag, len(seg))
    return idx[seg[idx - lag] == seg[idx]] if lag else np.arange(len(seg))


def model_predictions(model, dataset: SupervisedDataset, rows: np.ndarray) -> np.ndarray:
    """Predictions (m/s) of either model type for the given dataset rows."""
    if isinstance(model, narx.NarxModel):
        pred, prow = narx.predict(model, dataset)
        lookup = np.full(len(dataset.rows), -1)
        lookup[prow] = np.arange(len(prow))
        pos = lookup[rows]
        if np.any(pos < 0):
            raise DataError("requested rows lack a complete NARX window")
        return pred[pos]
    return anfis.anfis_predict(model, dataset.rows.features[rows])


def score_splits(model, dataset: SupervisedDataset, rows: np.ndarray):
    pred = model_predictions(model, dataset, rows)
    expected = dataset.rows.target[rows]
    labels = dataset.labels[rows]
    scores = {}
    for k, split in enumerate(SPLITS):
        sel = labels == k
        scores[split] = evaluate(expected[sel], pred[sel]) if np.count_nonzero(sel) >= 2 else None
    return scores, pred


def render_report_text(metrics: dict[str, dict[str, EvalMetrics | None]]) -> str:
    """Aligned plain-text comparison table, one line per model and split."""
    title = "3-hour-ahead wind speed forecast: model comparison"
    lines = [title, "=" * len(title),
             f"{'model':<7}{'split':<12}{'n':>6}{'MSE (m/s)^2':>14}{'R':>9}",
             f"{'-' * 6:<7}{'-' * 10:<12}{'-' * 5:>6}{'-' * 12:>14}{'-' * 7:>9}"]
    for model in MODELS:
        for split in SPLITS:
            m = metrics.get(model, {}).get(split)
            if m is None:
                lines.append(f"{model.upper():<7}{split:<12}{'-':>6}{'-':>14}{'-':>9}")
            else:
                n = "-" if m.n is None else str(m.n)
                lines.append(f"{model.upper():<7}{split:<12}{n:>6}{m.mse:>14.5f}{m.r:>9.4f}")
    return "\n".join(lines) + "\n"


def _metrics_dict(scores):
    return {split: (None if m is None else m.to_dict()) for split, m in scores.items()}


def _scatter_csv(model: str, split: str, ts, expected, predicted) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp", "expected", "predicted", "split", "model"])
    for t, e, p in zip(ts, expected, predicted):
        w.writerow([format_timestamp(t), repr(float(e)), repr(float(p)), split, model])
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the whole comparison and write every artifact; returns the report."""
    t_start = time.perf_counter()
    stage = "config"
    try:
        cfg.validate()
        stage = "ingest"
        series = load_series(cfg)
        stage = "features"
        dataset, seg = make_dataset(series, cfg.fractions, cfg.shuffled, cfg.shuffle_seed)

        stage = "narx"
        t0 = time.perf_counter()
        narx_model, narx_trace = narx.train(narx.init(cfg.narx, dataset.scaler), dataset)
        t_narx = time.perf_counter() - t0

        stage = "anfis"
        t0 = time.perf_counter()
        train_x = dataset.scaled_features()[dataset.mask("train")]
        anfis_model, anfis_trace = anfis.train_hybrid(anfis.init_model(cfg.anfis, train_x, dataset.scaler), dataset)
        t_anfis = time.perf_counter() - t0

        stage = "evaluate"
        lag = cfg.narx.max_lag
        rows = eval_rows(dataset, lag)
        models = {"narx": narx_model, "anfis": anfis_model}
        traces = {"narx": narx_trace, "anfis": anfis_trace}
        scores, preds = {}, {}
        for name, model in models.items():
            scores[name], preds[name] = score_splits(model, dataset, rows)
    except WindcastError as exc:
        raise exc.with_stage(stage)

    labels = dataset.labels[rows]
    report = {
        "format_version": REPORT_VERSION,
        "comparison_note": FAIRNESS_NOTE,
        "config": cfg.to_dict(),
        "kernel_backend": kernels.BACKEND,
        "data": {
            **ingest_summary(series, seg),
            "feature_rows": {s: dataset.count(s) for s in SPLITS},
        },
        "evaluation": {
            "alignment_lag": lag,
            "rows": {s: int(np.count_nonzero(labels == k)) for k, s in enumerate(SPLITS)},
            "split_hash": {name: dataset.split_hash() for name in MODELS},
        },
        "metrics": {name: _metrics_dict(scores[name]) for name in MODELS},
        "traces": {name: traces[name].to_dict() for name in MODELS},
    }

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "narx_model.json", narx_model.to_json())
    _write(out / "anfis_model.json", anfis_model.to_json())
    _write(out / "dataset.csv", dataset_to_csv(dataset))
    ts = dataset.rows.timestamps[rows]
    expected = dataset.rows.target[rows]
    for name in MODELS:
        _write(out / f"trace_{name}.csv", traces[name].to_csv())
        for k, split in enumerate(SPLITS):
            sel = labels == k
            _write(out / f"scatter_{name}_{split}.csv", _scatter_csv(name, split, ts[sel], expected[sel], preds[name][sel]))
    _write(out / "report.txt", render_report_text(scores))

    report["timing"] = {
        "narx_seconds": t_narx,
        "anfis_seconds": t_anfis,
        "total_seconds": time.perf_counter() - t_start,
    }
    _write(out / "report.json", json.dumps(report, indent=1) + "\n")
    return report


def report_without_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}
