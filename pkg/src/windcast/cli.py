"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure. Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import anfis, narx
from .errors import DataError, NumericalError, WindcastError
from .features import DATASET_COLUMNS, DEFAULT_FRACTIONS, SPLITS, dataset_from_csv, dataset_to_csv
from .harness import ExperimentConfig, eval_rows, load_series, make_dataset, model_predictions, run_experiment
from .ingest import (
    DEFAULT_CADENCE, format_timestamp, generate_synthetic, ingest_summary_json, parse_csv,
    serialize_csv, validate_cadence,
)
from .metrics import evaluate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fractions(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fractions {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("fractions need three comma-separated values")
    return parts


def _read_text(path: str) -> str:
    try:
        return Path(path).read_bytes().decode("utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _load_model(path: str):
    text = _read_text(path)
    try:
        fmt = json.loads(text).get("format")
    except (json.JSONDecodeError, AttributeError):
        raise DataError(f"{path} is not a model JSON file") from None
    if fmt == narx.FORMAT:
        return narx.NarxModel.from_json(text)
    if fmt == anfis.FORMAT:
        return anfis.AnfisModel.from_json(text)
    raise DataError(f"{path}: unknown model format {fmt!r}")


def _load_dataset(path: str, args, scaler=None):
    """Dataset CSV (with a split column) or raw observation CSV."""
    text = _read_text(path)
    header = tuple(h.strip() for h in text.split("\n", 1)[0].split(","))
    if header == DATASET_COLUMNS:
        return dataset_from_csv(text, scaler)
    series = parse_csv(text, cadence_seconds=args.cadence)
    ds, _ = make_dataset(series, args.fractions, args.shuffled, args.shuffle_seed)
    if scaler is not None:
        ds = replace(ds, scaler=scaler)
    return ds


def cmd_ingest(args) -> int:
    series = parse_csv(_read_text(args.csv), cadence_seconds=args.cadence)
    seg = validate_cadence(series, args.min_length)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        for i, s in enumerate(seg.segments):
            (Path(args.out) / f"segment_{i:04d}.csv").write_text(serialize_csv(s), encoding="utf-8")
    print(ingest_summary_json(series, seg))
    return 0


def cmd_synth(args) -> int:
    text = serialize_csv(generate_synthetic(args.seed, args.n, args.regime, args.cadence))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = ExperimentConfig(fractions=args.fractions, shuffled=args.shuffled,
                               shuffle_seed=args.shuffle_seed, cadence_seconds=args.cadence)
    if getattr(args, "data", None):
        cfg.csv_path, cfg.synthetic = args.data, None
    elif getattr(args, "synthetic", None):
        seed, n, regime = args.synthetic
        cfg.synthetic, cfg.csv_path = {"seed": int(seed), "n": int(n), "regime": regime}, None
    if args.out_dir:
        cfg.output_dir = args.out_dir
    return cfg


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    cfg.validate()
    ds, _ = make_dataset(load_series(cfg), cfg.fractions, cfg.shuffled, cfg.shuffle_seed)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "dataset.csv").write_text(dataset_to_csv(ds), encoding="utf-8")
    todo = ("narx", "anfis") if args.model == "both" else (args.model,)
    for name in todo:
        stage = f"train-{name}"
        try:
            if name == "narx":
                model, trace = narx.train(narx.init(cfg.narx, ds.scaler), ds)
            else:
                x = ds.scaled_features()[ds.mask("train")]
                model, trace = anfis.train_hybrid(anfis.init_model(cfg.anfis, x, ds.scaler), ds)
        except WindcastError as exc:
            raise exc.with_stage(stage)
        (out / f"{name}_model.json").write_text(model.to_json(), encoding="utf-8")
        (out / f"trace_{name}.csv").write_text(trace.to_csv(), encoding="utf-8")
        print(f"{name}: {trace.epochs} epochs, best {trace.best_epoch}", file=sys.stderr)
    return 0


def _rows_for(model, ds, align_lag):
    lag = align_lag
    if lag is None:
        lag = model.config.max_lag if isinstance(model, narx.NarxModel) else 0
    return eval_rows(ds, lag)


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    try:
        ds = _load_dataset(args.data, args, model.scaler)
        rows = _rows_for(model, ds, args.align_lag)
        rows = rows[ds.labels[rows] == SPLITS.index(args.split)]
        pred = model_predictions(model, ds, rows)
        metrics = evaluate(ds.rows.target[rows], pred)
    except WindcastError as exc:
        raise exc.with_stage("evaluate")
    print(json.dumps({"split": args.split, **metrics.to_dict()}))
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    try:
        ds = _load_dataset(args.data, args, model.scaler)
        rows = _rows_for(model, ds, None)
        pred = model_predictions(model, ds, rows)
    except WindcastError as exc:
        raise exc.with_stage("predict")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp", "target_time", "predicted_wind_speed_ms", "measured_wind_speed_ms", "split"])
    cadence = args.cadence
    for i, p in zip(rows, pred):
        t = int(ds.rows.timestamps[i])
        w.writerow([format_timestamp(t), format_timestamp(t + cadence), repr(float(p)),
                    repr(float(ds.rows.target[i])), SPLITS[ds.labels[i]]])
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_report(args) -> int:
    cfg = _experiment_config(args)
    run_experiment(cfg)
    sys.stdout.write((Path(cfg.output_dir) / "report.txt").read_text(encoding="utf-8"))
    print(f"artifacts written to {cfg.output_dir}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="windcast", description="Buoy wind speed forecasting with NARX and ANFIS.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_opts(sp):
        sp.add_argument("--cadence", type=int, default=DEFAULT_CADENCE, help="seconds between observations")
        sp.add_argument("--fractions", type=_fractions, default=DEFAULT_FRACTIONS, help="train,val,test")
        sp.add_argument("--shuffled", action="store_true", help="seeded random split instead of chronological")
        sp.add_argument("--shuffle-seed", type=int, default=0)

    sp = sub.add_parser("ingest", help="validate a CSV and report segments")
    sp.add_argument("csv")
    sp.add_argument("--cadence", type=int, default=DEFAULT_CADENCE)
    sp.add_argument("--min-length", type=int, default=3)
    sp.add_argument("--out", help="directory for per-segment CSV files")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("synth", help="write a synthetic buoy CSV")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--regime", choices=("calm", "stormy", "mixed"), default="mixed")
    sp.add_argument("--cadence", type=int, default=DEFAULT_CADENCE)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_synth)

    for name, func, helptext in (("train", cmd_train, "train model(s)"), ("report", cmd_report, "full comparison run")):
        sp = sub.add_parser(name, help=helptext)
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--data", help="observation CSV")
        src.add_argument("--synthetic", nargs=3, metavar=("SEED", "N", "REGIME"))
        sp.add_argument("--config", help="experiment config JSON")
        sp.add_argument("--out-dir", default=None)
        data_opts(sp)
        if name == "train":
            sp.add_argument("--model", choices=("narx", "anfis", "both"), default="both")
        sp.set_defaults(func=func)

    sp = sub.add_parser("evaluate", help="score a model file on one split")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True, help="dataset.csv from train/report, or observation CSV")
    sp.add_argument("--split", choices=SPLITS, default="test")
    sp.add_argument("--align-lag", type=int, default=None,
                    help="score only rows with this many in-segment predecessors (report uses the NARX lag)")
    data_opts(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("predict", help="write predictions for a CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out")
    data_opts(sp)
    sp.set_defaults(func=cmd_predict)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "command", None) in ("train", "report") and not (args.data or args.synthetic or args.config):
            raise UsageError(f"windcast {args.command}: one of --data, --synthetic or --config is required")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
