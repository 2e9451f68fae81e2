"""Buoy observation series: CSV parsing, cadence segmentation, synthetic data.

The canonical interchange format is a UTF-8 CSV with header::

    timestamp,air_temperature_c,air_pressure_mbar,wind_speed_ms

``timestamp`` is either ISO-8601 (naive values are taken as UTC) or integer
epoch seconds. Rows with a missing, unparseable or physically invalid field
(negative wind speed, non-positive pressure) are dropped and counted.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DuplicateTimestamp, EmptyInput, InvalidCount, SchemaMismatch

DEFAULT_CADENCE = 10800

CANONICAL_SCHEMA = {
    "timestamp": "timestamp",
    "air_temperature": "air_temperature_c",
    "air_pressure": "air_pressure_mbar",
    "wind_speed": "wind_speed_ms",
}

# build_rows needs one step for the delta and one for the lead target
MIN_SEGMENT_LENGTH = 3


class ObservationRecord(NamedTuple):
    timestamp: int  # epoch seconds, UTC
    air_temperature: float
    air_pressure: float
    wind_speed: float


@dataclass(frozen=True)
class ObservationSeries:
    """Column-oriented, time-sorted buoy series."""

    timestamps: np.ndarray
    air_temperature: np.ndarray
    air_pressure: np.ndarray
    wind_speed: np.ndarray
    cadence_seconds: int = DEFAULT_CADENCE
    rows_read: int = 0
    rows_dropped: int = 0

    def __post_init__(self):
        n = len(self.timestamps)
        for name in ("air_temperature", "air_pressure", "wind_speed"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has length {len(getattr(self, name))}, expected {n}")
        if self.cadence_seconds <= 0:
            raise ValueError("cadence_seconds must be positive")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def records(self) -> list[ObservationRecord]:
        return list(self)

    def __iter__(self) -> Iterator[ObservationRecord]:
        for i in range(len(self)):
            yield ObservationRecord(
                int(self.timestamps[i]),
                float(self.air_temperature[i]),
                float(self.air_pressure[i]),
                float(self.wind_speed[i]),
            )

    def slice(self, start: int, stop: int) -> "ObservationSeries":
        return ObservationSeries(
            self.timestamps[start:stop],
            self.air_temperature[start:stop],
            self.air_pressure[start:stop],
            self.wind_speed[start:stop],
            self.cadence_seconds,
        )

    @classmethod
    def from_records(cls, records, cadence_seconds: int = DEFAULT_CADENCE) -> "ObservationSeries":
        records = list(records)
        cols = list(zip(*records)) if records else [(), (), (), ()]
        return cls(
            np.asarray(cols[0], dtype=np.int64),
            np.asarray(cols[1], dtype=np.float64),
            np.asarray(cols[2], dtype=np.float64),
            np.asarray(cols[3], dtype=np.float64),
            cadence_seconds,
        )


def _parse_timestamp(raw: str) -> int:
    raw = raw.strip()
    if not raw:
        raise ValueError("empty timestamp")
    try:
        value = float(raw)
    except ValueError:
        pass
    else:
        if not math.isfinite(value) or value != int(value):
            raise ValueError(f"non-integral epoch timestamp {raw!r}")
        return int(value)
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(round(dt.timestamp()))


def _parse_float(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError("non-finite value")
    return value


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_csv(
    data: bytes | str,
    schema: dict[str, str] | None = None,
    cadence_seconds: int = DEFAULT_CADENCE,
) -> ObservationSeries:
    """Parse buoy CSV text into a sorted :class:`ObservationSeries`.

    ``schema`` maps the logical fields (``timestamp``, ``air_temperature``,
    ``air_pressure``, ``wind_speed``) to column names; unspecified fields use
    the canonical names.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    cols = {**CANONICAL_SCHEMA, **(schema or {})}

    reader = csv.reader(io.StringIO(data))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyInput("CSV has no header row") from None
    missing = [c for c in cols.values() if c not in header]
    if missing:
        raise SchemaMismatch(f"column(s) {missing} not in header {header}")
    idx = {k: header.index(v) for k, v in cols.items()}

    records = []
    read = dropped = 0
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        read += 1
        try:
            rec = ObservationRecord(
                _parse_timestamp(row[idx["timestamp"]]),
                _parse_float(row[idx["air_temperature"]]),
                _parse_float(row[idx["air_pressure"]]),
                _parse_float(row[idx["wind_speed"]]),
            )
        except (ValueError, IndexError, OverflowError):
            dropped += 1
            continue
        if rec.wind_speed < 0 or rec.air_pressure <= 0:
            dropped += 1
            continue
        records.append(rec)

    if not records:
        raise EmptyInput(f"no valid rows ({read} read, {dropped} dropped)")
    records.sort(key=lambda r: r.timestamp)
    for a, b in zip(records, records[1:]):
        if a.timestamp == b.timestamp:
            raise DuplicateTimestamp(f"timestamp {format_timestamp(a.timestamp)} appears more than once")

    series = ObservationSeries.from_records(records, cadence_seconds)
    return ObservationSeries(
        series.timestamps, series.air_temperature, series.air_pressure, series.wind_speed,
        cadence_seconds, rows_read=read, rows_dropped=dropped,
    )


def read_csv(path, schema=None, cadence_seconds: int = DEFAULT_CADENCE) -> ObservationSeries:
    with open(path, "rb") as fh:
        return parse_csv(fh.read(), schema, cadence_seconds)


def serialize_csv(series: ObservationSeries) -> str:
    """Canonical CSV text; floats use shortest round-trip repr."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CANONICAL_SCHEMA.values())
    for rec in series:
        writer.writerow([
            format_timestamp(rec.timestamp),
            repr(rec.air_temperature),
            repr(rec.air_pressure),
            repr(rec.wind_speed),
        ])
    return buf.getvalue()


class Segmentation(NamedTuple):
    segments: list[ObservationSeries]
    discarded: int
    discarded_records: int


def validate_cadence(series: ObservationSeries, min_length: int = MIN_SEGMENT_LENGTH) -> Segmentation:
    """Split ``series`` wherever consecutive timestamps are not exactly one
    cadence apart; drop segments shorter than ``min_length``."""
    if len(series) == 0:
        raise EmptyInput("cannot segment an empty series")
    gaps = np.diff(series.timestamps)
    cuts = np.flatnonzero(gaps != series.cadence_seconds) + 1
    bounds = [0, *cuts.tolist(), len(series)]
    kept, discarded, lost = [], 0, 0
    for start, stop in zip(bounds, bounds[1:]):
        if stop - start >= min_length:
            kept.append(series.slice(start, stop))
        else:
            discarded += 1
            lost += stop - start
    return Segmentation(kept, discarded, lost)


def ingest_summary(series: ObservationSeries, seg: Segmentation) -> dict:
    return {
        "rows_read": series.rows_read,
        "rows_dropped": series.rows_dropped,
        "segments": len(seg.segments),
        "segments_discarded": seg.discarded,
    }


def ingest_summary_json(series: ObservationSeries, seg: Segmentation) -> str:
    return json.dumps(ingest_summary(series, seg))


# ---------------------------------------------------------------------------
# synthetic series
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 stream; portable by construction (64-bit integer ops only)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal(self) -> float:
        """Standard normal by Box-Muller (cosine branch only)."""
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class _Regime:
    base_wind: float
    drive: float
    wind_noise: float
    pressure_noise: float


_CALM = _Regime(base_wind=5.0, drive=1.0, wind_noise=0.30, pressure_noise=0.20)
_STORMY = _Regime(base_wind=9.5, drive=1.8, wind_noise=0.50, pressure_noise=0.35)
# per-step probability of staying in the current regime (mixed mode)
_STAY = {"calm": 0.99, "stormy": 0.96}

SYNTHETIC_EPOCH = 1293840000  # 2011-01-01T00:00:00Z
_YEAR_STEPS = 2920.0  # 3-hour steps per 365 days
_DAY_STEPS = 8.0


def _softplus(z: float) -> float:
    return math.log1p(math.exp(-abs(z))) + max(z, 0.0)


def generate_synthetic(
    seed: int,
    n: int,
    regime: str = "mixed",
    cadence_seconds: int = DEFAULT_CADENCE,
) -> ObservationSeries:
    """Deterministic synthetic buoy series.

    One step k (3 h apart, starting 2011-01-01T00Z) draws, in this order,
    one uniform ``q`` and three normals ``e1, e2, e3`` from
    :class:`SplitMix64` seeded with ``seed``::

        regime      mixed mode: leave the current regime when q >= stay prob
        base_k      = base_{k-1} + 0.15 (regime.base_wind - base_{k-1})
        a_k         = 1.8 a_{k-1} - 0.83 a_{k-2} + regime.pressure_noise e1
        u_k         = 1.2 u_{k-1} - 0.3 u_{k-2}
                      - regime.drive tanh(a_{k-1} - a_{k-2}) + regime.wind_noise e2
        season_k    = cos(2 pi k / 2920)
        wind_k      = softplus(base_k + 1.5 season_k + u_k)
        tau_k       = 0.9 tau_{k-1} + 0.3 e3
        temp_k      = 16 - 6 season_k + 1.5 sin(2 pi (k mod 8) / 8) + tau_k
        pressure_k  = 1013.25 + a_k

    Falling pressure over the previous step (negative tendency) pushes the
    wind anomaly up. All state starts at zero; ``base`` starts at the initial
    regime's mean (calm for ``calm`` and ``mixed``).
    """
    if n < 16:
        raise InvalidCount(f"n must be >= 16, got {n}")
    if regime not in ("calm", "stormy", "mixed"):
        raise ValueError(f"unknown regime {regime!r}")

    rng = SplitMix64(seed)
    current = "stormy" if regime == "stormy" else "calm"
    params = {"calm": _CALM, "stormy": _STORMY}

    ts = np.empty(n, dtype=np.int64)
    temp = np.empty(n)
    pres = np.empty(n)
    wind = np.empty(n)

    base = params[current].base_wind
    a1 = a2 = 0.0
    u1 = u2 = 0.0
    tau = 0.0
    for k in range(n):
        q = rng.uniform()
        e1, e2, e3 = rng.normal(), rng.normal(), rng.normal()
        if regime == "mixed" and q >= _STAY[current]:
            current = "stormy" if current == "calm" else "calm"
        p = params[current]

        base += 0.15 * (p.base_wind - base)
        a = 1.8 * a1 - 0.83 * a2 + p.pressure_noise * e1
        u = 1.2 * u1 - 0.3 * u2 - p.drive * math.tanh(a1 - a2) + p.wind_noise * e2
        season = math.cos(2.0 * math.pi * k / _YEAR_STEPS)
        tau = 0.9 * tau + 0.3 * e3

        ts[k] = SYNTHETIC_EPOCH + k * cadence_seconds
        wind[k] = _softplus(base + 1.5 * season + u)
        temp[k] = 16.0 - 6.0 * season + 1.5 * math.sin(2.0 * math.pi * (k % 8) / _DAY_STEPS) + tau
        pres[k] = 1013.25 + a

        a2, a1 = a1, a
        u2, u1 = u1, u

    return ObservationSeries(ts, temp, pres, wind, cadence_seconds, rows_read=n, rows_dropped=0)
