from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field


@dataclass
class TrainTrace:
    """Per-epoch losses in scaled-target units.

    ``val_mse`` is NaN for epochs without a validation split. ``step_size``
    is the step used after the epoch was scored (ANFIS premise step, NARX
    learning rate).
    """

    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    step_size: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    skipped_rows: int = 0

    def record(self, train: float, val: float, step: float) -> None:
        self.train_mse.append(float(train))
        self.val_mse.append(float(val))
        self.step_size.append(float(step))

    @property
    def epochs(self) -> int:
        return len(self.train_mse)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_mse", "val_mse", "step_size"])
        for i, (a, b, s) in enumerate(zip(self.train_mse, self.val_mse, self.step_size), start=1):
            w.writerow([i, repr(a), "" if math.isnan(b) else repr(b), repr(s)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
            "skipped_rows": self.skipped_rows,
            "train_mse": self.train_mse,
            "val_mse": [None if math.isnan(v) else v for v in self.val_mse],
            "step_size": self.step_size,
        }
