from datetime import datetime, time, timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from transitnet.errors import ConstantSeries, EmptyCounts
from transitnet.frequency import (
    SLOT_LABELS,
    DailyWindow,
    Window,
    bin_time_slots,
    count_trips,
    cumulative_frequency,
    normalize_slot_table,
    normalize_slots,
    slot_index,
    split_hf_lf,
)
from transitnet.ingest import Leg, Mode
from transitnet.preprocess import TravelChain


def chain(pid, ts):
    return TravelChain(pid, (Leg(Mode.SUBWAY, "1", 1, "A", ts), Leg(Mode.SUBWAY, "1", 2, "B", ts + timedelta(minutes=9))))


def test_count_trips_window():
    week = Window(datetime(2018, 3, 1), datetime(2018, 3, 8))
    cs = [chain("p", datetime(2018, 3, 1, 8) + timedelta(hours=i)) for i in range(55)] + [chain("q", datetime(2018, 3, 9))]
    counts = count_trips(cs, week)
    assert counts == {"p": 55}
    assert count_trips([chain("r", datetime(2018, 3, 2))]) == {"r": 1}


def _threshold_by_enumeration(counts, q):
    n = len(counts)
    for t in range(1, max(counts.values()) + 2):
        if sum(c >= t for c in counts.values()) / n <= q:
            return t


def test_split_worked_example():
    s = split_hf_lf({"A": 55, "B": 10, "C": 3, "D": 1}, 0.25)
    assert s.threshold == 11 and s.hf_ids == {"A"} and s.lf_ids == {"B", "C", "D"}
    assert s.cohort("A") == "high" and s.cohort("D") == "low" and s.cohort("Z") is None


def test_split_all_equal_and_empty():
    s = split_hf_lf({p: 4 for p in "abcdef"}, 0.25)
    assert s.hf_ids == frozenset() and s.threshold == 5
    with pytest.raises(EmptyCounts):
        split_hf_lf({}, 0.25)


@given(st.dictionaries(st.text("abcdefgh", min_size=1, max_size=3), st.integers(1, 30), min_size=1, max_size=40), st.floats(0.05, 0.95))
def test_split_set_equations(counts, q):
    s = split_hf_lf(counts, q)
    assert s.threshold == _threshold_by_enumeration(counts, q)
    assert s.hf_ids == {p for p, c in counts.items() if c >= s.threshold}
    assert s.lf_ids == {p for p, c in counts.items() if c < s.threshold}
    assert not s.hf_ids & s.lf_ids and s.hf_ids | s.lf_ids == set(counts)
    assert s.hf_share <= q


def test_cumulative_frequency():
    rows = cumulative_frequency({"a": 1, "b": 1, "c": 3, "d": 7})
    assert rows == [(1, 2, 0.5), (3, 1, 0.75), (7, 1, 1.0)]


def test_slots():
    assert SLOT_LABELS[0] == "00-02" and SLOT_LABELS[-1] == "22-24" and len(SLOT_LABELS) == 12
    assert SLOT_LABELS[slot_index(datetime(2018, 3, 1, 6, 52))] == "06-08"
    assert slot_index(datetime(2018, 3, 1, 0, 0, 0)) == 0
    assert slot_index(datetime(2018, 3, 1, 23, 59, 59)) == 11
    flow = bin_time_slots([chain("p", datetime(2018, 3, 1, 8, 10)), chain("q", datetime(2018, 3, 1, 9, 50))])
    assert flow.counts[SLOT_LABELS.index("08-10")] == 2 and flow.total == 2


def test_daily_window_is_half_open():
    w = DailyWindow("morning", time(6), time(10))
    assert datetime(2018, 3, 1, 6) in w and datetime(2018, 3, 1, 9, 59, 59) in w and datetime(2018, 3, 1, 10) not in w


def test_normalize_series():
    assert normalize_slots([5, 5, 10]) == [0, 0, 1]
    assert normalize_slots([0, 1, 2]) == [0, 0.5, 1]
    with pytest.raises(ConstantSeries):
        normalize_slots([3, 3, 3])


SLOT_COUNTS = {
    "01high": [873, 481, 31984, 574449, 685076, 255185, 260506, 265715, 492632, 661251, 305452, 74355],
    "01low": [1689, 994, 75706, 1128045, 1538264, 792695, 819192, 878660, 1328076, 1313580, 544129, 117478],
    "02high": [923, 541, 45361, 577760, 642371, 251382, 262857, 267877, 485278, 605854, 273537, 67278],
    "02low": [1508, 797, 71866, 1021976, 1428009, 784971, 839557, 870069, 1213996, 1165313, 529395, 113334],
}
PUBLISHED_NORMALIZED = {
    "01high": [0.000254912, 0, 0.020485985, 0.373243819, 0.445183098, 0.165630651, 0.169090828, 0.172478171, 0.320039303, 0.429690015, 0.198318618, 0.048039288],
    "01low": [0.000785546, 0.000333597, 0.048917825, 0.733239996, 1, 0.515166314, 0.532396964, 0.57106822, 0.863317516, 0.853890959, 0.353527123, 0.076081606],
    "02high": [0.000287427, 0.0000390172, 0.029184872, 0.375396919, 0.4174126, 0.163157611, 0.170619652, 0.173884092, 0.315257094, 0.393666076, 0.177564715, 0.043437208],
    "02low": [0.000667845, 0.000205491, 0.046420724, 0.664264724, 0.928302628, 0.510143499, 0.545640055, 0.565481606, 0.789132797, 0.757474884, 0.343945797, 0.073386817],
}


def test_joint_slot_normalization_matches_published_table():
    got = normalize_slot_table(SLOT_COUNTS)
    for label, ref in PUBLISHED_NORMALIZED.items():
        assert np.allclose(got[label], ref, rtol=0, atol=5e-9), label
    # scaling each column on its own would not reproduce it
    assert normalize_slots(SLOT_COUNTS["01high"])[4] == 1.0 != PUBLISHED_NORMALIZED["01high"][4]
