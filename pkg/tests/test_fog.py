import json
import math

from fogchain.canonical import canonical_json
from fogchain.cas import ContentStore, hash_from_hex
from fogchain.contracts import (
    CANONICAL_POLICY,
    ContractHost,
    encode_add_device,
    encode_add_policy,
    encode_delete_device,
    encode_update_device,
)
from fogchain.devices import DeviceGateway, spawn_fleet
from fogchain.fog import AggregatorNode, SinkNode
from fogchain.ledger import GasSchedule, Ledger

HOUR = 3_600_000


def build_stack(n_devices=2, n_aggs=2, schedule=None, archive_mode="combined"):
    host = ContractHost(schedule=schedule, archive_mode=archive_mode)
    ledger = Ledger(host.schedule, host.apply_tx)
    gateway = DeviceGateway()
    fleet = spawn_fleet(n_devices, 42)
    for spec in fleet:
        gateway.attach(spec)
    aggs = [AggregatorNode(f"agg-{i + 1}", gateway, HOUR)
            for i in range(n_aggs)]
    cas = ContentStore()
    sink = SinkNode("sink-1", ledger, host, cas, aggs, HOUR)
    return ledger, host, gateway, aggs, cas, sink, fleet


def register(ledger, sink, fleet, now=0, policies=False):
    for spec in fleet:
        op, payload, args = encode_add_device(spec.registration())
        ledger.submit(op, payload, args, now)
        if policies:
            op, payload, args = encode_add_policy(
                spec.device_id, CANONICAL_POLICY)
            ledger.submit(op, payload, args, now)
    ledger.settle(now)
    sink.dispatch(now)


def test_registration_schedules_first_poll_one_interval_out():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(1, 1)
    register(ledger, sink, fleet, now=15_000)
    agg = aggs[0]
    entry = agg.managed[fleet[0].device_id]
    assert entry.next_poll == 15_000 + 60_000
    samples, _ = agg.poll_due(15_000 + 59_999)
    assert samples == []
    samples, _ = agg.poll_due(15_000 + 60_000)
    assert [s.timestamp for s in samples] == [75_000]


def test_catch_up_polling_covers_the_gap():
    # five intervals elapse unseen; five samples appear, each stamped at
    # its scheduled time, not at the catch-up instant
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(1, 1)
    register(ledger, sink, fleet, now=0)
    samples, _ = aggs[0].poll_due(300_000)
    assert [s.timestamp for s in samples] == [
        60_000, 120_000, 180_000, 240_000, 300_000]


def test_round_robin_assignment():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(4, 2)
    register(ledger, sink, fleet, now=0)
    by_agg = {agg.name: sorted(agg.managed) for agg in aggs}
    assert by_agg["agg-1"] == ["device-0001", "device-0003"]
    assert by_agg["agg-2"] == ["device-0002", "device-0004"]


def test_update_and_delete_route_to_owner():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(2, 2)
    register(ledger, sink, fleet, now=0)
    spec = fleet[0].registration()
    spec["polling_interval"] = 120
    op, payload, args = encode_update_device(spec)
    ledger.submit(op, payload, args, 0)
    ledger.settle(0)
    sink.dispatch(0)
    assert aggs[0].managed["device-0001"].registration[
        "polling_interval"] == 120

    op, payload, args = encode_delete_device("device-0001")
    ledger.submit(op, payload, args, 0)
    ledger.settle(0)
    sink.dispatch(0)
    assert "device-0001" not in aggs[0].managed
    assert "device-0001" not in sink.owned


def test_policy_events_reach_the_engine():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(1, 1)
    register(ledger, sink, fleet, now=0)
    op, payload, args = encode_add_policy(
        fleet[0].device_id, {**CANONICAL_POLICY, "max_violations": 0,
                             "threshold_type": "Maximum",
                             "threshold_value": -1000.0})
    ledger.submit(op, payload, args, 0)
    ledger.settle(0)
    sink.dispatch(0)
    # every reading violates Maximum -1000, so the first poll alerts
    samples, alerts = aggs[0].poll_due(60_000)
    assert len(samples) == 1
    assert len(alerts) == 1
    assert alerts[0].policy_id == "p-0001"
    assert aggs[0].tsdb.query_events_range(
        fleet[0].device_id, 0, HOUR) == alerts


def test_policies_attached_at_registration_time():
    # policy recorded before the sink sees the device: the snapshot taken
    # on DeviceAdded must carry it
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(1, 1)
    spec = fleet[0]
    op, payload, args = encode_add_device(spec.registration())
    ledger.submit(op, payload, args, 0)
    op, payload, args = encode_add_policy(
        spec.device_id, {**CANONICAL_POLICY, "max_violations": 0,
                         "threshold_type": "Maximum",
                         "threshold_value": -1000.0})
    ledger.submit(op, payload, args, 0)
    ledger.settle(0)  # both land before any dispatch
    sink.dispatch(0)
    _, alerts = aggs[0].poll_due(60_000)
    assert len(alerts) == 1


def test_archival_anchors_each_closed_window():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(2, 1)
    register(ledger, sink, fleet, now=0)
    for t in range(60_000, HOUR + 1, 60_000):
        aggs[0].poll_due(t)
    tx_ids = sink.archival_tick(HOUR)
    assert len(tx_ids) == 1
    # non-blocking: still pending until a block is produced
    assert ledger.tx(tx_ids[0]).status == "pending"
    ledger.settle(HOUR)
    assert ledger.tx(tx_ids[0]).status == "confirmed"

    for spec in fleet:
        archives = host.get_hashes(spec.device_id)
        assert [a["window_index"] for a in archives] == [0]
        doc = json.loads(cas.get(hash_from_hex(archives[0]["data_hash"])))
        assert doc["device_id"] == spec.device_id
        assert doc["window_index"] == 0
        got = {s["timestamp"] for s in doc["samples"]}
        expected = {s.timestamp for s in aggs[0].tsdb.query_range(
            spec.device_id, 0, HOUR)}
        assert got == expected


def test_empty_windows_are_anchored_too():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(1, 1)
    register(ledger, sink, fleet, now=0)
    sink.archival_tick(HOUR)  # no polls ever ran
    ledger.settle(HOUR)
    archives = host.get_hashes(fleet[0].device_id)
    assert [a["window_index"] for a in archives] == [0]
    doc = json.loads(cas.get(hash_from_hex(archives[0]["data_hash"])))
    assert doc["samples"] == [] and doc["events"] == []


def test_archival_catches_up_after_missed_ticks():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(1, 1)
    register(ledger, sink, fleet, now=0)
    sink.archival_tick(3 * HOUR)  # first tick ever, three windows closed
    ledger.settle(3 * HOUR)
    archives = host.get_hashes(fleet[0].device_id)
    assert [a["window_index"] for a in archives] == [0, 1, 2]


def test_mid_window_registration_anchors_from_that_window():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(1, 1)
    register(ledger, sink, fleet, now=HOUR + 600_000)  # inside window 1
    sink.archival_tick(2 * HOUR)
    ledger.settle(2 * HOUR)
    archives = host.get_hashes(fleet[0].device_id)
    assert [a["window_index"] for a in archives] == [1]


def test_batches_chunk_at_contract_capacity():
    # capacity forced tiny via the gas limit; surcharges zeroed so the
    # chunked transactions can actually confirm
    sched = GasSchedule(gas_limit=60_000, op_surcharge={})
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(
        40, 1, schedule=sched)
    register(ledger, sink, fleet, now=0)
    capacity = host.batch_capacity
    assert capacity == (60_000 - 21_000) // (68 * 32) == 17
    tx_ids = sink.archival_tick(HOUR)
    assert len(tx_ids) == math.ceil(40 / capacity) == 3
    ledger.settle(HOUR)
    statuses = {ledger.tx(t).status for t in tx_ids}
    assert statuses == {"confirmed"}
    assert all(len(host.get_hashes(s.device_id)) == 1 for s in fleet)


def test_split_mode_anchors_two_hashes():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(
        1, 1, archive_mode="split")
    register(ledger, sink, fleet, now=0)
    sink.archival_tick(HOUR)
    ledger.settle(HOUR)
    archive = host.get_hashes(fleet[0].device_id)[0]
    data = json.loads(cas.get(hash_from_hex(archive["data_hash"])))
    events = json.loads(cas.get(hash_from_hex(archive["events_hash"])))
    assert "samples" in data and "samples" not in events
    assert "events" in events and "events" not in data


def test_two_sinks_partition_devices():
    host = ContractHost()
    ledger = Ledger(host.schedule, host.apply_tx)
    gateway = DeviceGateway()
    fleet = spawn_fleet(10, 42)
    for spec in fleet:
        gateway.attach(spec)
    cas = ContentStore()
    aggs_a = [AggregatorNode("a1", gateway, HOUR)]
    aggs_b = [AggregatorNode("b1", gateway, HOUR)]
    sink_a = SinkNode("sink-1", ledger, host, cas, aggs_a, HOUR,
                      sink_index=0, sink_count=2)
    sink_b = SinkNode("sink-2", ledger, host, cas, aggs_b, HOUR,
                      sink_index=1, sink_count=2)
    for spec in fleet:
        op, payload, args = encode_add_device(spec.registration())
        ledger.submit(op, payload, args, 0)
    ledger.settle(0)
    sink_a.dispatch(0)
    sink_b.dispatch(0)
    owned_a = set(sink_a.owned)
    owned_b = set(sink_b.owned)
    assert owned_a.isdisjoint(owned_b)
    assert owned_a | owned_b == {s.device_id for s in fleet}
    assert owned_a and owned_b  # both got some share


def test_timeout_diagnostics_logged():
    ledger, host, gateway, aggs, cas, sink, fleet = build_stack(1, 1)
    fleet[0].reachability = 0.0
    register(ledger, sink, fleet, now=0)
    samples, alerts = aggs[0].poll_due(60_000)
    assert samples == [] and alerts == []
    assert aggs[0].diagnostics == [
        {"t": 60_000, "device_id": fleet[0].device_id, "error": "timeout"}]
