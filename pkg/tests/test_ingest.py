import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windcast.errors import DuplicateTimestamp, EmptyInput, InvalidCount, SchemaMismatch
from windcast.ingest import (
    ObservationSeries, SplitMix64, generate_synthetic, ingest_summary_json, parse_csv,
    serialize_csv, validate_cadence,
)
from windcast.metrics import regression_r

HEADER = "timestamp,air_temperature_c,air_pressure_mbar,wind_speed_ms\n"
T0 = 1514764800  # 2018-01-01T00:00:00Z
H3 = 10800


def _series(gaps, start=T0):
    ts = np.cumsum([start, *gaps]).astype(np.int64)
    n = len(ts)
    return ObservationSeries(ts, np.full(n, 15.0), np.full(n, 1013.0), np.linspace(1, 2, n))


class TestParseCsv:
    def test_three_rows(self):
        text = HEADER + "".join(f"{T0 + k * H3},15.{k},1012.5,{4 + k}\n" for k in range(3))
        s = parse_csv(text.encode())
        assert len(s) == 3
        assert s.rows_dropped == 0 and s.rows_read == 3
        assert s.records[1] == (T0 + H3, 15.1, 1012.5, 5.0)

    def test_nan_row_dropped(self):
        text = HEADER + f"{T0},15,1012,4\n{T0 + H3},15,1012,NaN\n{T0 + 2 * H3},15,1012,6\n"
        s = parse_csv(text)
        assert len(s) == 2
        assert s.rows_dropped == 1

    @pytest.mark.parametrize("bad", ["", "abc", "-1", "inf"])
    def test_bad_wind_values_dropped(self, bad):
        text = HEADER + f"{T0},15,1012,4\n{T0 + H3},15,1012,{bad}\n"
        assert parse_csv(text).rows_dropped == 1

    def test_nonpositive_pressure_dropped(self):
        text = HEADER + f"{T0},15,0,4\n{T0 + H3},15,1012,5\n"
        assert len(parse_csv(text)) == 1

    def test_duplicate_timestamp_rejects_file(self):
        text = HEADER + f"{T0},15,1012,4\n{T0},16,1011,5\n"
        with pytest.raises(DuplicateTimestamp):
            parse_csv(text)

    def test_duplicate_across_formats(self):
        text = HEADER + f"{T0},15,1012,4\n2018-01-01T00:00:00Z,16,1011,5\n"
        with pytest.raises(DuplicateTimestamp):
            parse_csv(text)

    def test_schema_mismatch(self):
        with pytest.raises(SchemaMismatch):
            parse_csv("time,air_temperature_c,air_pressure_mbar,wind_speed_ms\n1,2,3,4\n")

    def test_custom_schema(self):
        text = "t,TEMP,PRES,WSPD\n2018-01-01T00:00:00,15,1012,4\n"
        s = parse_csv(text, {"timestamp": "t", "air_temperature": "TEMP",
                             "air_pressure": "PRES", "wind_speed": "WSPD"})
        assert s.timestamps[0] == T0

    def test_empty(self):
        with pytest.raises(EmptyInput):
            parse_csv("")
        with pytest.raises(EmptyInput):
            parse_csv(HEADER + f"{T0},x,1012,4\n")

    def test_sorted_and_iso_offsets(self):
        text = HEADER + "2018-01-01T06:00:00+03:00,1,1000,1\n2018-01-01T00:00:00Z,2,1000,2\n"
        s = parse_csv(text)
        assert list(s.timestamps) == [T0, T0 + H3]


class TestValidateCadence:
    def test_perfect(self):
        seg = validate_cadence(_series([H3] * 9))
        assert [len(s) for s in seg.segments] == [10]

    def test_single_gap(self):
        seg = validate_cadence(_series([H3] * 3 + [2 * H3] + [H3] * 5))
        assert [len(s) for s in seg.segments] == [4, 6]

    def test_gap_pattern_before_and_after_filter(self):
        s = _series([H3, H3, 3 * H3, H3])
        assert [len(x) for x in validate_cadence(s, min_length=1).segments] == [3, 2]
        seg = validate_cadence(s)
        assert [len(x) for x in seg.segments] == [3]
        assert seg.discarded == 1 and seg.discarded_records == 2

    def test_summary_json(self):
        s = parse_csv(HEADER + f"{T0},15,1012,4\n{T0 + H3},15,1012,x\n{T0 + 2 * H3},15,1012,6\n")
        seg = validate_cadence(s)
        assert json.loads(ingest_summary_json(s, seg)) == {
            "rows_read": 3, "rows_dropped": 1, "segments": 0, "segments_discarded": 2}

    @given(st.lists(st.sampled_from([H3, H3, H3, 2 * H3, 7 * H3]), min_size=0, max_size=60))
    def test_splitting_never_drops_records(self, gaps):
        s = _series(gaps)
        seg = validate_cadence(s, min_length=1)
        joined = np.concatenate([x.timestamps for x in seg.segments])
        np.testing.assert_array_equal(joined, s.timestamps)
        for x in seg.segments:
            assert np.all(np.diff(x.timestamps) == H3)


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(finite, st.floats(1e-3, 2e3), st.floats(0, 80)), min_size=1, max_size=30),
       st.integers(0, 2_000_000_000))
@settings(max_examples=60)
def test_csv_round_trip(values, start):
    ts = start + H3 * np.arange(len(values), dtype=np.int64)
    T, P, W = (np.array(c, dtype=float) for c in zip(*values))
    s = ObservationSeries(ts, T, P, W)
    back = parse_csv(serialize_csv(s))
    np.testing.assert_array_equal(back.timestamps, ts)
    for a, b in ((back.air_temperature, T), (back.air_pressure, P), (back.wind_speed, W)):
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=0)


class TestSynthetic:
    def test_splitmix_reference_stream(self):
        r = SplitMix64(0)
        assert [r.next_u64() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]

    def test_deterministic(self):
        a = serialize_csv(generate_synthetic(1, 100, "calm"))
        b = serialize_csv(generate_synthetic(1, 100, "calm"))
        assert a == b

    def test_seed_matters(self):
        a = generate_synthetic(1, 100, "calm")
        b = generate_synthetic(2, 100, "calm")
        assert not np.array_equal(a.wind_speed, b.wind_speed)

    def test_invalid_count(self):
        with pytest.raises(InvalidCount):
            generate_synthetic(1, 15)

    @pytest.mark.parametrize("regime", ["calm", "stormy", "mixed"])
    def test_invariants(self, regime):
        s = generate_synthetic(11, 500, regime)
        assert np.all(s.wind_speed >= 0)
        assert np.all(s.air_pressure > 0)
        assert np.all(np.diff(s.timestamps) == H3)
        assert len(validate_cadence(s).segments) == 1

    def test_autocorrelation(self):
        w = generate_synthetic(7, 5000, "mixed").wind_speed
        assert regression_r(w[:-1], w[1:]) > 0.8

    def test_regimes_differ(self):
        calm = generate_synthetic(5, 2000, "calm").wind_speed.mean()
        stormy = generate_synthetic(5, 2000, "stormy").wind_speed.mean()
        assert stormy > calm + 2

    def test_falling_pressure_raises_wind(self):
        s = generate_synthetic(7, 5000, "calm")
        tendency = np.diff(s.air_pressure)[:-1]
        wind_change = np.diff(s.wind_speed)[1:]
        assert regression_r(tendency, wind_change) < -0.2
