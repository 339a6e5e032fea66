import json

import pytest

from fogchain.canonical import canonical_json
from fogchain.cas import content_hash
from fogchain.contracts import (
    ARCHIVE_SPLIT,
    CANONICAL_DEVICE,
    CANONICAL_EMPTY_ARCHIVE,
    CANONICAL_POLICY,
    ContractHost,
    build_archive_objects,
    encode_add_device,
    encode_add_policy,
    encode_append_hashes,
    encode_delete_device,
    encode_delete_policy,
    encode_update_device,
    encode_update_policy,
    replay_blocks,
)
from fogchain.errors import OversizedTransaction, UnknownDevice
from fogchain.ledger import GasSchedule, Ledger


def wired() -> tuple[Ledger, ContractHost]:
    host = ContractHost()
    return Ledger(host.schedule, host.apply_tx), host


def submit_ok(ledger, encoded, now=0):
    op, payload, args = encoded
    tx_id = ledger.submit(op, payload, args, now)
    ledger.produce_block(now + 15_000)
    tx = ledger.tx(tx_id)
    assert tx.status == "confirmed", tx.error
    return tx


def submit_fail(ledger, encoded, now=0):
    op, payload, args = encoded
    tx_id = ledger.submit(op, payload, args, now)
    ledger.produce_block(now + 15_000)
    tx = ledger.tx(tx_id)
    assert tx.status == "failed"
    return tx


def device(n=1, **overrides):
    profile = dict(CANONICAL_DEVICE)
    profile["device_id"] = f"device-{n:04d}"
    profile.update(overrides)
    return profile


def digest_hex(n: int) -> str:
    return content_hash(f"archive-{n}".encode()).hex()


# --- device registry ----------------------------------------------------------


def test_add_and_read_device():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    view = host.get_device("device-0001")
    assert view["model"] == "sensor-mk1"
    assert view["deleted"] is False
    assert "credentials" not in view


def test_duplicate_device_fails_but_charges():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    tx = submit_fail(ledger, encode_add_device(device(1)))
    assert "DuplicateDevice" in tx.error
    assert tx.gas_used is not None and tx.gas_used > 21_000


def test_update_rewrites_profile():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_update_device(device(1, ip_address="10.9.9.9")))
    assert host.get_device("device-0001")["ip_address"] == "10.9.9.9"


def test_update_or_delete_unknown_device_fails():
    ledger, host = wired()
    tx = submit_fail(ledger, encode_update_device(device(1)))
    assert "UnknownDevice" in tx.error
    tx = submit_fail(ledger, encode_delete_device("device-0001"))
    assert "UnknownDevice" in tx.error


def test_delete_leaves_tombstone():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_delete_device("device-0001"))
    view = host.get_device("device-0001")
    assert view["deleted"] is True
    assert host.list_devices() == []
    assert [v["device_id"] for v in host.list_devices(include_deleted=True)] \
        == ["device-0001"]
    # writes treat a tombstoned device as unknown
    tx = submit_fail(ledger, encode_update_device(device(1)))
    assert "UnknownDevice" in tx.error


def test_readd_after_delete_resets_archives():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_append_hashes(
        [{"device_id": "device-0001", "window_index": 0,
          "data_hash": digest_hex(0)}]))
    assert len(host.get_hashes("device-0001")) == 1
    submit_ok(ledger, encode_delete_device("device-0001"))
    # archives readable while tombstoned
    assert len(host.get_hashes("device-0001")) == 1
    submit_ok(ledger, encode_add_device(device(1, model="sensor-mk2")))
    assert host.get_hashes("device-0001") == []
    assert host.get_device("device-0001")["model"] == "sensor-mk2"
    # fresh history may anchor window 0 again
    submit_ok(ledger, encode_append_hashes(
        [{"device_id": "device-0001", "window_index": 0,
          "data_hash": digest_hex(7)}]))


def test_registration_shape_is_checked():
    ledger, host = wired()
    bad = device(1)
    bad.pop("credentials")
    tx = submit_fail(ledger, encode_add_device(bad))
    assert "InvalidRegistration" in tx.error
    tx = submit_fail(ledger, encode_add_device(device(1, polling_interval=0)))
    assert "InvalidRegistration" in tx.error
    tx = submit_fail(ledger, encode_add_device(
        device(1, target_attributes=[])))
    assert "InvalidRegistration" in tx.error
    tx = submit_fail(ledger, encode_add_device({**device(1), "extra": 1}))
    assert "InvalidRegistration" in tx.error


def test_unknown_device_read_raises():
    _, host = wired()
    with pytest.raises(UnknownDevice):
        host.get_device("device-9999")
    with pytest.raises(UnknownDevice):
        host.get_policies("device-9999")
    with pytest.raises(UnknownDevice):
        host.get_hashes("device-9999")


# --- policy registry --------------------------------------------------------------


def test_policy_crud_and_id_assignment():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_add_policy("device-0001", CANONICAL_POLICY))
    submit_ok(ledger, encode_add_policy(
        "device-0001", {**CANONICAL_POLICY, "threshold_type": "Maximum",
                        "threshold_value": 30.0}))
    policies = host.get_policies("device-0001")
    assert [p["policy_id"] for p in policies] == ["p-0001", "p-0002"]

    submit_ok(ledger, encode_update_policy(
        "device-0001", "p-0001", {**CANONICAL_POLICY, "max_violations": 9}))
    assert host.get_policies("device-0001")[0]["max_violations"] == 9

    submit_ok(ledger, encode_delete_policy("device-0001", "p-0001"))
    assert [p["policy_id"] for p in host.get_policies("device-0001")] \
        == ["p-0002"]
    # ids are never reused
    submit_ok(ledger, encode_add_policy("device-0001", CANONICAL_POLICY))
    assert [p["policy_id"] for p in host.get_policies("device-0001")] \
        == ["p-0002", "p-0003"]


def test_policy_requires_live_device():
    ledger, host = wired()
    tx = submit_fail(ledger, encode_add_policy("device-0001",
                                               CANONICAL_POLICY))
    assert "UnknownDevice" in tx.error
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_add_policy("device-0001", CANONICAL_POLICY))
    submit_ok(ledger, encode_delete_device("device-0001"))
    tx = submit_fail(ledger, encode_add_policy("device-0001",
                                               CANONICAL_POLICY))
    assert "UnknownDevice" in tx.error


def test_policies_survive_device_deletion():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_add_policy("device-0001", CANONICAL_POLICY))
    submit_ok(ledger, encode_delete_device("device-0001"))
    assert len(host.get_policies("device-0001")) == 1
    # and are still editable while the device is gone
    submit_ok(ledger, encode_update_policy(
        "device-0001", "p-0001", {**CANONICAL_POLICY, "criticality": "High"}))
    assert host.get_policies("device-0001")[0]["criticality"] == "High"
    # re-adding the device picks the list back up
    submit_ok(ledger, encode_add_device(device(1)))
    assert [p["policy_id"] for p in host.get_policies("device-0001")] \
        == ["p-0001"]


def test_policy_errors():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    tx = submit_fail(ledger, encode_update_policy(
        "device-0001", "p-0001", CANONICAL_POLICY))
    assert "UnknownPolicy" in tx.error
    tx = submit_fail(ledger, encode_delete_policy("device-0001", "p-0001"))
    assert "UnknownPolicy" in tx.error
    tx = submit_fail(ledger, encode_add_policy(
        "device-0001", {**CANONICAL_POLICY, "criticality": "Severe"}))
    assert "InvalidPolicy" in tx.error


# --- archive anchoring ----------------------------------------------------------------


def test_append_hashes_strictly_increasing():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_append_hashes(
        [{"device_id": "device-0001", "window_index": 0,
          "data_hash": digest_hex(0)}]))
    tx = submit_fail(ledger, encode_append_hashes(
        [{"device_id": "device-0001", "window_index": 0,
          "data_hash": digest_hex(1)}]))
    assert "NonMonotonicWindow" in tx.error
    # gaps are allowed, going up is all that matters
    submit_ok(ledger, encode_append_hashes(
        [{"device_id": "device-0001", "window_index": 5,
          "data_hash": digest_hex(2)}]))
    indexes = [a["window_index"] for a in host.get_hashes("device-0001")]
    assert indexes == [0, 5]


def test_append_batch_is_atomic():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_add_device(device(2)))
    tx = submit_fail(ledger, encode_append_hashes([
        {"device_id": "device-0001", "window_index": 0,
         "data_hash": digest_hex(0)},
        {"device_id": "device-0002", "window_index": 3,
         "data_hash": digest_hex(1)},
        {"device_id": "device-0002", "window_index": 3,  # not increasing
         "data_hash": digest_hex(2)},
    ]))
    assert "NonMonotonicWindow" in tx.error
    assert host.get_hashes("device-0001") == []
    assert host.get_hashes("device-0002") == []


def test_append_unknown_device_fails_batch():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    tx = submit_fail(ledger, encode_append_hashes([
        {"device_id": "device-0001", "window_index": 0,
         "data_hash": digest_hex(0)},
        {"device_id": "device-0077", "window_index": 0,
         "data_hash": digest_hex(1)},
    ]))
    assert "UnknownDevice" in tx.error
    assert host.get_hashes("device-0001") == []


def test_append_capacity_limit():
    # shrink the limit so the boundary is testable without 3k devices;
    # surcharges zeroed so small blocks can still confirm appends
    sched = GasSchedule(gas_limit=100_000, op_surcharge={})
    host = ContractHost(schedule=sched)
    ledger = Ledger(sched, host.apply_tx)
    capacity = host.batch_capacity
    assert capacity == (100_000 - 21_000) // (68 * 32) == 36
    for n in range(1, capacity + 2):
        profile = device(n)
        op, payload, args = encode_add_device(profile)
        ledger.submit(op, payload, args, 0)
    ledger.settle(0)

    # an over-capacity batch of dense digests dies at the door: its
    # intrinsic gas alone busts the block limit
    dense = [{"device_id": f"device-{n:04d}", "window_index": 0,
              "data_hash": digest_hex(n)} for n in range(1, capacity + 2)]
    op, payload, args = encode_append_hashes(dense)
    with pytest.raises(OversizedTransaction):
        ledger.submit(op, payload, args, 0)

    # sparse digests squeeze under the intrinsic cap, so the contract's
    # own entry-count check is what rejects them
    sparse = [{"device_id": f"device-{n:04d}", "window_index": 0,
               "data_hash": (bytes(31) + bytes([n])).hex()}
              for n in range(1, capacity + 2)]
    op, payload, args = encode_append_hashes(sparse)
    tx_id = ledger.submit(op, payload, args, 0)
    ledger.settle(0)
    tx = ledger.tx(tx_id)
    assert tx.status == "failed" and "BatchTooLarge" in tx.error

    op, payload, args = encode_append_hashes(sparse[:capacity])
    tx_id = ledger.submit(op, payload, args, 0)
    ledger.settle(0)
    assert ledger.tx(tx_id).status == "confirmed"


def test_empty_batch_rejected():
    ledger, host = wired()
    tx = submit_fail(ledger, encode_append_hashes([]))
    assert "BatchTooLarge" in tx.error


def test_split_mode_needs_both_hashes():
    sched = GasSchedule()
    host = ContractHost(schedule=sched, archive_mode=ARCHIVE_SPLIT)
    ledger = Ledger(sched, host.apply_tx)
    assert host.batch_capacity == 1488
    submit_ok(ledger, encode_add_device(device(1)))
    tx = submit_fail(ledger, encode_append_hashes(
        [{"device_id": "device-0001", "window_index": 0,
          "data_hash": digest_hex(0)}]))
    assert "PayloadMismatch" in tx.error
    submit_ok(ledger, encode_append_hashes(
        [{"device_id": "device-0001", "window_index": 0,
          "data_hash": digest_hex(0), "events_hash": digest_hex(1)}]))
    archive = host.get_hashes("device-0001")[0]
    assert archive["events_hash"] == digest_hex(1)


def test_tampered_payload_fails():
    ledger, host = wired()
    op, payload, args = encode_add_device(device(1))
    tx_id = ledger.submit(op, payload + b" ", args, 0)
    ledger.produce_block(15_000)
    tx = ledger.tx(tx_id)
    assert tx.status == "failed" and "PayloadMismatch" in tx.error


# --- calibration vectors ------------------------------------------------------------------


def test_canonical_payload_sizes_frozen():
    assert len(canonical_json(CANONICAL_DEVICE)) == 159
    assert len(canonical_json(
        {"device_id": "device-0001", "policy": CANONICAL_POLICY})) == 156
    digest = content_hash(canonical_json(CANONICAL_EMPTY_ARCHIVE))
    assert digest.count(0) == 0  # surcharge calibration assumed this


def test_empty_window_archive_matches_canonical_vector():
    docs = build_archive_objects("device-0001", 0, [], [])
    assert docs == [CANONICAL_EMPTY_ARCHIVE]


def test_calibrated_gas_values():
    ledger, host = wired()
    tx = submit_ok(ledger, encode_add_device(CANONICAL_DEVICE))
    assert tx.gas_used == 137_200
    tx = submit_ok(ledger, encode_add_policy("device-0001", CANONICAL_POLICY))
    assert tx.gas_used == 199_500
    digest = content_hash(canonical_json(CANONICAL_EMPTY_ARCHIVE))
    tx = submit_ok(ledger, encode_append_hashes(
        [{"device_id": "device-0001", "window_index": 0,
          "data_hash": digest}]))
    assert tx.gas_used == 134_600


# --- export and replay ------------------------------------------------------------------------


def test_export_state_redacts_credentials():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    dumped = json.dumps(host.export_state())
    assert "secret-token" not in dumped
    assert host.export_state()["devices"]["device-0001"][
        "credentials_sha256"] == content_hash(b"secret-token").hex()


def test_replay_reproduces_state():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    submit_ok(ledger, encode_add_device(device(2)))
    submit_ok(ledger, encode_add_policy("device-0001", CANONICAL_POLICY))
    submit_fail(ledger, encode_add_device(device(1)))  # duplicate
    submit_ok(ledger, encode_append_hashes(
        [{"device_id": "device-0002", "window_index": 0,
          "data_hash": digest_hex(0)}]))
    submit_ok(ledger, encode_delete_device("device-0002"))
    replayed = replay_blocks(ledger.blocks)
    assert replayed.export_state() == host.export_state()


def test_replay_detects_status_tampering():
    ledger, host = wired()
    submit_ok(ledger, encode_add_device(device(1)))
    tx = submit_fail(ledger, encode_add_device(device(1)))
    tx.status = "confirmed"  # lie about the duplicate
    with pytest.raises(AssertionError):
        replay_blocks(ledger.blocks)
