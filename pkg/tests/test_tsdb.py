import json
import random

import pytest

from fogchain.errors import AlreadyDrained, InvalidRange, WindowNotClosed
from fogchain.tsdb import AlertEvent, Sample, TimeSeriesStore

from oracles import naive_range

HOUR = 3_600_000


def s(device, t, value=1.0, attr="temperature"):
    return Sample(device, attr, value, t)


def test_query_is_half_open_and_ordered():
    store = TimeSeriesStore()
    for t in (30, 10, 20):
        store.write_sample(s("d1", t))
    got = store.query_range("d1", 10, 30)
    assert [x.timestamp for x in got] == [10, 20]  # 30 excluded, sorted


def test_equal_timestamps_keep_insertion_order():
    store = TimeSeriesStore()
    a = s("d1", 50, value=1.0)
    b = s("d1", 50, value=2.0)
    store.write_sample(a)
    store.write_sample(b)
    got = store.query_range("d1", 0, 100)
    assert got == [a, b]


def test_invalid_range_rejected():
    store = TimeSeriesStore()
    with pytest.raises(InvalidRange):
        store.query_range("d1", 10, 5)
    with pytest.raises(InvalidRange):
        store.query_events_range("d1", 10, 5)
    assert store.query_range("d1", 5, 5) == []


def test_unknown_device_reads_empty():
    store = TimeSeriesStore()
    assert store.query_range("nope", 0, 100) == []
    assert store.query_events_range("nope", 0, 100) == []


def test_attribute_filter():
    store = TimeSeriesStore()
    store.write_sample(s("d1", 10, attr="temperature"))
    store.write_sample(s("d1", 20, attr="humidity"))
    got = store.query_range("d1", 0, 100, attribute="humidity")
    assert [x.attribute for x in got] == ["humidity"]


def test_drain_requires_closed_window():
    store = TimeSeriesStore(window_ms=HOUR)
    store.write_sample(s("d1", 10))
    ref = store.window("d1", 0)
    with pytest.raises(WindowNotClosed):
        store.drain_window(ref, now=HOUR - 1)
    samples, events = store.drain_window(ref, now=HOUR)
    assert [x.timestamp for x in samples] == [10]
    assert events == []


def test_drain_exactly_once_but_reads_survive():
    store = TimeSeriesStore(window_ms=HOUR)
    store.write_sample(s("d1", 10))
    ref = store.window("d1", 0)
    store.drain_window(ref, now=HOUR)
    with pytest.raises(AlreadyDrained):
        store.drain_window(ref, now=2 * HOUR)
    # the log still serves the drained range
    assert len(store.query_range("d1", 0, HOUR)) == 1
    assert store.is_drained("d1", 0)
    assert not store.is_drained("d1", 1)


def test_window_grid_enforced():
    store = TimeSeriesStore(window_ms=HOUR)
    ref = store.window("d1", 2)
    assert (ref.start, ref.end) == (2 * HOUR, 3 * HOUR)
    bad = type(ref)("d1", 2, 100, 100 + HOUR)
    with pytest.raises(ValueError):
        store.drain_window(bad, now=10 * HOUR)


def test_events_roundtrip():
    store = TimeSeriesStore()
    event = AlertEvent("d1", "temperature", "p-0001", "High", "Maximum",
                       30.0, 4, 31.5, 250)
    store.write_event(event)
    assert store.query_events_range("d1", 0, 1000) == [event]
    assert store.query_events_range("d1", 251, 1000) == []


def test_export_ndjson_parses():
    store = TimeSeriesStore()
    store.write_sample(s("d1", 10))
    store.write_event(AlertEvent("d1", "temperature", "p-0001", "Low",
                                 "Minimum", 5.0, 2, 1.0, 20))
    lines = store.export_ndjson("d1").strip().split("\n")
    kinds = [json.loads(line)["type"] for line in lines]
    assert kinds == ["sample", "event"]
    assert store.export_ndjson("absent") == ""


def test_random_ranges_match_naive_filter():
    rng = random.Random(2027)
    store = TimeSeriesStore()
    written = []
    for _ in range(400):
        sample = s("d1", rng.randrange(0, 5000), value=rng.random())
        store.write_sample(sample)
        written.append(sample)
    for _ in range(100):
        a = rng.randrange(0, 5000)
        b = rng.randrange(a, 5001)
        got = store.query_range("d1", a, b)
        expected = sorted(naive_range(written, a, b),
                          key=lambda x: x.timestamp)
        assert got == expected
