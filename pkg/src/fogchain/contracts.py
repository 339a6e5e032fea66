"""The two on-ledger contracts and their wire encodings.

The device registry contract owns device profiles and, per device, the
append-only list of anchored window archives. The policy contract owns
threshold policies, keyed (device_id, policy_id), and deliberately
survives device deletion so a re-registered device picks its rules back
up. One ContractHost holds both states and is the ledger's apply
function; everything it does is driven by transaction args, so replaying
a block log against a fresh host reproduces the state exactly.

Encodings: every operation's metered payload is the canonical JSON of
its args, except anchoring. An anchoring payload is the raw digests
packed back to back, 32 bytes per hash; the (device_id, window_index)
bookkeeping rides in the unmetered args envelope. Charging JSON text for
digests would roughly quadruple their byte cost and cap batches far
below the capacity the gas math allows, so the digests travel packed.
"""

from dataclasses import dataclass, field
from typing import Optional

from .canonical import canonical_json
from .cas import HASH_SIZE, content_hash, hash_from_hex
from .errors import (
    BatchTooLarge,
    DuplicateDevice,
    InvalidRegistration,
    NonMonotonicWindow,
    PayloadMismatch,
    UnknownDevice,
    UnknownPolicy,
)
from .ledger import (
    GasSchedule,
    OP_ADD_DEVICE,
    OP_ADD_POLICY,
    OP_APPEND_HASHES,
    OP_DELETE_DEVICE,
    OP_DELETE_POLICY,
    OP_UPDATE_DEVICE,
    OP_UPDATE_POLICY,
    Transaction,
    max_devices_per_tx,
)
from .policy import MonitoringPolicy, validate_policy_args

ARCHIVE_COMBINED = "combined"
ARCHIVE_SPLIT = "split"

# event kinds emitted by the contracts
EV_DEVICE_ADDED = "DeviceAdded"
EV_DEVICE_UPDATED = "DeviceUpdated"
EV_DEVICE_DELETED = "DeviceDeleted"
EV_POLICY_ADDED = "PolicyAdded"
EV_POLICY_UPDATED = "PolicyUpdated"
EV_POLICY_DELETED = "PolicyDeleted"
EV_HASHES_ANCHORED = "HashesAnchored"

REGISTRATION_FIELDS = (
    "device_id", "ip_address", "model",
    "polling_interval", "target_attributes", "credentials",
)

# Reference payloads the default gas surcharges were calibrated against:
# with the default schedule, registering CANONICAL_DEVICE costs exactly
# 137,200 gas, adding CANONICAL_POLICY costs 199,500, and anchoring the
# digest of CANONICAL_EMPTY_ARCHIVE costs 134,600.
CANONICAL_DEVICE = {
    "device_id": "device-0001",
    "ip_address": "10.0.0.1",
    "model": "sensor-mk1",
    "polling_interval": 60,
    "target_attributes": ["temperature"],
    "credentials": "secret-token",
}
CANONICAL_POLICY = {
    "attribute": "temperature",
    "threshold_type": "Minimum",
    "threshold_value": 10.0,
    "max_violations": 5,
    "criticality": "Medium",
}
CANONICAL_EMPTY_ARCHIVE = {
    "device_id": "device-0001",
    "window_index": 0,
    "samples": [],
    "events": [],
}


# --- archive objects --------------------------------------------------------

def sample_row(sample) -> dict:
    return {
        "attribute": sample.attribute,
        "timestamp": sample.timestamp,
        "value": sample.value,
    }


def event_row(event) -> dict:
    return {
        "attribute": event.attribute,
        "policy_id": event.policy_id,
        "criticality": event.criticality,
        "threshold_type": event.threshold_type,
        "threshold_value": event.threshold_value,
        "violation_count": event.violation_count,
        "value": event.value,
        "timestamp": event.timestamp,
    }


def build_archive_objects(device_id: str, window_index: int,
                          samples: list, events: list,
                          mode: str = ARCHIVE_COMBINED) -> list[dict]:
    """Archive documents for one closed window, in anchoring order."""
    if mode == ARCHIVE_COMBINED:
        return [{
            "device_id": device_id,
            "window_index": window_index,
            "samples": [sample_row(s) for s in samples],
            "events": [event_row(e) for e in events],
        }]
    if mode == ARCHIVE_SPLIT:
        return [
            {
                "device_id": device_id,
                "window_index": window_index,
                "samples": [sample_row(s) for s in samples],
            },
            {
                "device_id": device_id,
                "window_index": window_index,
                "events": [event_row(e) for e in events],
            },
        ]
    raise ValueError(f"unknown archive mode {mode!r}")


# --- payload encoders ---------------------------------------------------------

def encode_add_device(profile: dict) -> tuple[str, bytes, dict]:
    args = dict(profile)
    return OP_ADD_DEVICE, canonical_json(args), args


def encode_update_device(profile: dict) -> tuple[str, bytes, dict]:
    args = dict(profile)
    return OP_UPDATE_DEVICE, canonical_json(args), args


def encode_delete_device(device_id: str) -> tuple[str, bytes, dict]:
    args = {"device_id": device_id}
    return OP_DELETE_DEVICE, canonical_json(args), args


def encode_add_policy(device_id: str, policy: dict) -> tuple[str, bytes, dict]:
    args = {"device_id": device_id, "policy": dict(policy)}
    return OP_ADD_POLICY, canonical_json(args), args


def encode_update_policy(device_id: str, policy_id: str,
                         policy: dict) -> tuple[str, bytes, dict]:
    args = {"device_id": device_id, "policy_id": policy_id,
            "policy": dict(policy)}
    return OP_UPDATE_POLICY, canonical_json(args), args


def encode_delete_policy(device_id: str,
                         policy_id: str) -> tuple[str, bytes, dict]:
    args = {"device_id": device_id, "policy_id": policy_id}
    return OP_DELETE_POLICY, canonical_json(args), args


def encode_append_hashes(entries: list[dict]) -> tuple[str, bytes, dict]:
    """entries: [{device_id, window_index, data_hash, events_hash?}].

    Hashes may be bytes or hex strings; args carry hex, the payload
    carries the digests packed in entry order (data hash first, then the
    events hash when present).
    """
    norm = []
    packed = bytearray()
    for entry in entries:
        data_hash = entry["data_hash"]
        if isinstance(data_hash, str):
            data_hash = hash_from_hex(data_hash)
        row = {
            "device_id": entry["device_id"],
            "window_index": entry["window_index"],
            "data_hash": data_hash.hex(),
        }
        packed += data_hash
        events_hash = entry.get("events_hash")
        if events_hash is not None:
            if isinstance(events_hash, str):
                events_hash = hash_from_hex(events_hash)
            row["events_hash"] = events_hash.hex()
            packed += events_hash
        norm.append(row)
    args = {"entries": norm}
    return OP_APPEND_HASHES, bytes(packed), args


def packed_hashes(args: dict) -> bytes:
    """Re-derive the packed payload an append_hashes args dict implies."""
    packed = bytearray()
    for entry in args.get("entries", []):
        packed += hash_from_hex(entry["data_hash"])
        if "events_hash" in entry:
            packed += hash_from_hex(entry["events_hash"])
    return bytes(packed)


# --- contract state -------------------------------------------------------------

@dataclass
class WindowArchive:
    window_index: int
    data_hash: str           # hex
    events_hash: Optional[str] = None

    def to_dict(self) -> dict:
        out = {"window_index": self.window_index, "data_hash": self.data_hash}
        if self.events_hash is not None:
            out["events_hash"] = self.events_hash
        return out


@dataclass
class DeviceRecord:
    device_id: str
    ip_address: str
    model: str
    polling_interval: int    # seconds
    target_attributes: list
    credentials: str
    deleted: bool = False
    archives: list = field(default_factory=list)  # WindowArchive, ascending

    def view(self) -> dict:
        # credentials are write-only; no read path ever returns them
        return {
            "device_id": self.device_id,
            "ip_address": self.ip_address,
            "model": self.model,
            "polling_interval": self.polling_interval,
            "target_attributes": list(self.target_attributes),
            "deleted": self.deleted,
            "archived_windows": len(self.archives),
        }


def _check_registration(args: dict) -> None:
    extra = set(args) - set(REGISTRATION_FIELDS)
    if extra:
        raise InvalidRegistration(f"unknown fields {sorted(extra)}")
    missing = set(REGISTRATION_FIELDS) - set(args)
    if missing:
        raise InvalidRegistration(f"missing fields {sorted(missing)}")
    for name in ("device_id", "ip_address", "model", "credentials"):
        if not isinstance(args[name], str) or not args[name]:
            raise InvalidRegistration(f"{name} must be a non-empty string")
    interval = args["polling_interval"]
    if isinstance(interval, bool) or not isinstance(interval, int) or interval <= 0:
        raise InvalidRegistration("polling_interval must be a positive integer")
    attrs = args["target_attributes"]
    if (not isinstance(attrs, list) or not attrs
            or not all(isinstance(a, str) and a for a in attrs)):
        raise InvalidRegistration(
            "target_attributes must be a non-empty list of names")


class ContractHost:
    """Both contracts plus the dispatch glue the ledger calls into."""

    def __init__(self, schedule: Optional[GasSchedule] = None,
                 hash_size: int = HASH_SIZE,
                 archive_mode: str = ARCHIVE_COMBINED):
        if archive_mode not in (ARCHIVE_COMBINED, ARCHIVE_SPLIT):
            raise ValueError(f"unknown archive mode {archive_mode!r}")
        self.schedule = schedule or GasSchedule()
        self.hash_size = hash_size
        self.archive_mode = archive_mode
        per_entry = hash_size if archive_mode == ARCHIVE_COMBINED else hash_size * 2
        self.batch_capacity = max_devices_per_tx(self.schedule, per_entry)
        self.devices: dict[str, DeviceRecord] = {}
        self.policies: dict[str, dict[str, MonitoringPolicy]] = {}
        self._policy_seq: dict[str, int] = {}

    # --- dispatch ------------------------------------------------------------

    def apply_tx(self, tx: Transaction) -> list[tuple[str, dict]]:
        if tx.op_kind == OP_APPEND_HASHES:
            expected = packed_hashes(tx.args)
        else:
            expected = canonical_json(tx.args)
        if tx.payload != expected:
            raise PayloadMismatch(
                f"payload does not encode args for {tx.op_kind}")
        handler = {
            OP_ADD_DEVICE: self._add_device,
            OP_UPDATE_DEVICE: self._update_device,
            OP_DELETE_DEVICE: self._delete_device,
            OP_ADD_POLICY: self._add_policy,
            OP_UPDATE_POLICY: self._update_policy,
            OP_DELETE_POLICY: self._delete_policy,
            OP_APPEND_HASHES: self._append_hashes,
        }.get(tx.op_kind)
        if handler is None:
            raise PayloadMismatch(f"unknown operation {tx.op_kind!r}")
        return handler(tx.args)

    # --- device registry -------------------------------------------------------

    def _live_device(self, device_id: str) -> DeviceRecord:
        record = self.devices.get(device_id)
        if record is None or record.deleted:
            raise UnknownDevice(device_id)
        return record

    def _add_device(self, args: dict) -> list[tuple[str, dict]]:
        _check_registration(args)
        device_id = args["device_id"]
        existing = self.devices.get(device_id)
        if existing is not None and not existing.deleted:
            raise DuplicateDevice(device_id)
        # re-registration after delete starts a fresh archive history
        self.devices[device_id] = DeviceRecord(
            device_id=device_id,
            ip_address=args["ip_address"],
            model=args["model"],
            polling_interval=args["polling_interval"],
            target_attributes=list(args["target_attributes"]),
            credentials=args["credentials"],
        )
        return [(EV_DEVICE_ADDED, dict(args))]

    def _update_device(self, args: dict) -> list[tuple[str, dict]]:
        _check_registration(args)
        record = self._live_device(args["device_id"])
        record.ip_address = args["ip_address"]
        record.model = args["model"]
        record.polling_interval = args["polling_interval"]
        record.target_attributes = list(args["target_attributes"])
        record.credentials = args["credentials"]
        return [(EV_DEVICE_UPDATED, dict(args))]

    def _delete_device(self, args: dict) -> list[tuple[str, dict]]:
        record = self._live_device(args["device_id"])
        record.deleted = True
        return [(EV_DEVICE_DELETED, {"device_id": record.device_id})]

    # --- policy registry ----------------------------------------------------------

    def _add_policy(self, args: dict) -> list[tuple[str, dict]]:
        device_id = args.get("device_id")
        if not isinstance(device_id, str) or not device_id:
            raise UnknownDevice(str(device_id))
        self._live_device(device_id)
        validate_policy_args(args.get("policy") or {})
        seq = self._policy_seq.get(device_id, 0) + 1
        self._policy_seq[device_id] = seq
        spec = args["policy"]
        policy = MonitoringPolicy(
            policy_id=f"p-{seq:04d}",
            attribute=spec["attribute"],
            threshold_type=spec["threshold_type"],
            threshold_value=float(spec["threshold_value"]),
            max_violations=spec["max_violations"],
            criticality=spec["criticality"],
        )
        self.policies.setdefault(device_id, {})[policy.policy_id] = policy
        return [(EV_POLICY_ADDED,
                 {"device_id": device_id, "policy": policy.to_dict()})]

    def _find_policy(self, device_id: str, policy_id: str) -> MonitoringPolicy:
        policy = self.policies.get(device_id, {}).get(policy_id)
        if policy is None:
            raise UnknownPolicy(f"{device_id}/{policy_id}")
        return policy

    def _update_policy(self, args: dict) -> list[tuple[str, dict]]:
        device_id = args.get("device_id", "")
        policy_id = args.get("policy_id", "")
        self._find_policy(device_id, policy_id)
        validate_policy_args(args.get("policy") or {})
        spec = args["policy"]
        policy = MonitoringPolicy(
            policy_id=policy_id,
            attribute=spec["attribute"],
            threshold_type=spec["threshold_type"],
            threshold_value=float(spec["threshold_value"]),
            max_violations=spec["max_violations"],
            criticality=spec["criticality"],
        )
        self.policies[device_id][policy_id] = policy
        return [(EV_POLICY_UPDATED,
                 {"device_id": device_id, "policy": policy.to_dict()})]

    def _delete_policy(self, args: dict) -> list[tuple[str, dict]]:
        device_id = args.get("device_id", "")
        policy_id = args.get("policy_id", "")
        policy = self._find_policy(device_id, policy_id)
        del self.policies[device_id][policy_id]
        return [(EV_POLICY_DELETED,
                 {"device_id": device_id, "policy_id": policy_id,
                  "policy": policy.to_dict()})]

    # --- archive anchoring -----------------------------------------------------------

    def _append_hashes(self, args: dict) -> list[tuple[str, dict]]:
        entries = args.get("entries") or []
        if not entries:
            raise BatchTooLarge("empty batch")
        if len(entries) > self.batch_capacity:
            raise BatchTooLarge(
                f"{len(entries)} entries exceeds capacity {self.batch_capacity}")
        # validate everything before touching state: the batch is atomic
        last_index: dict[str, int] = {}
        records = []
        for entry in entries:
            record = self._live_device(entry["device_id"])
            floor = last_index.get(record.device_id)
            if floor is None and record.archives:
                floor = record.archives[-1].window_index
            index = entry["window_index"]
            if isinstance(index, bool) or not isinstance(index, int) or index < 0:
                raise NonMonotonicWindow(
                    f"bad window_index {index!r} for {record.device_id}")
            if floor is not None and index <= floor:
                raise NonMonotonicWindow(
                    f"window {index} for {record.device_id} not above {floor}")
            if self.archive_mode == ARCHIVE_SPLIT and "events_hash" not in entry:
                raise PayloadMismatch("split mode requires events_hash")
            if self.archive_mode == ARCHIVE_COMBINED and "events_hash" in entry:
                raise PayloadMismatch("combined mode carries a single hash")
            last_index[record.device_id] = index
            records.append((record, entry))
        for record, entry in records:
            record.archives.append(WindowArchive(
                window_index=entry["window_index"],
                data_hash=entry["data_hash"],
                events_hash=entry.get("events_hash"),
            ))
        return [(EV_HASHES_ANCHORED, {"entries": [dict(e) for e in entries]})]

    # --- read views --------------------------------------------------------------------

    def _known_device(self, device_id: str) -> DeviceRecord:
        record = self.devices.get(device_id)
        if record is None:
            raise UnknownDevice(device_id)
        return record

    def get_device(self, device_id: str) -> dict:
        """Profile view; a deleted device still reads back as a tombstone."""
        return self._known_device(device_id).view()

    def list_devices(self, include_deleted: bool = False) -> list[dict]:
        out = []
        for device_id in sorted(self.devices):
            record = self.devices[device_id]
            if record.deleted and not include_deleted:
                continue
            out.append(record.view())
        return out

    def get_policies(self, device_id: str) -> list[dict]:
        self._known_device(device_id)
        return [p.to_dict() for p in self.policies.get(device_id, {}).values()]

    def get_hashes(self, device_id: str) -> list[dict]:
        record = self._known_device(device_id)
        return [a.to_dict() for a in record.archives]

    # --- export / replay ----------------------------------------------------------------

    def export_state(self) -> dict:
        """Deterministic dump of both contracts, credentials fingerprinted."""
        devices = {}
        for device_id in sorted(self.devices):
            record = self.devices[device_id]
            devices[device_id] = {
                "device_id": record.device_id,
                "ip_address": record.ip_address,
                "model": record.model,
                "polling_interval": record.polling_interval,
                "target_attributes": list(record.target_attributes),
                "credentials_sha256": content_hash(
                    record.credentials.encode("utf-8")).hex(),
                "deleted": record.deleted,
                "archives": [a.to_dict() for a in record.archives],
            }
        policies = {
            device_id: [p.to_dict() for p in by_id.values()]
            for device_id, by_id in sorted(self.policies.items())
            if by_id
        }
        return {
            "archive_mode": self.archive_mode,
            "batch_capacity": self.batch_capacity,
            "devices": devices,
            "policies": policies,
        }


def replay_blocks(blocks, schedule: Optional[GasSchedule] = None,
                  hash_size: int = HASH_SIZE,
                  archive_mode: str = ARCHIVE_COMBINED) -> ContractHost:
    """Rebuild contract state from a block log.

    Every charged transaction is re-applied through the same dispatch
    path; a transaction that failed originally must fail again, which
    replay asserts rather than trusting the recorded status.
    """
    from .errors import ContractError
    from .ledger import CONFIRMED, FAILED

    host = ContractHost(schedule=schedule, hash_size=hash_size,
                        archive_mode=archive_mode)
    for block in blocks:
        for tx in block.txs:
            try:
                host.apply_tx(tx)
                outcome = CONFIRMED
            except ContractError:
                outcome = FAILED
            if tx.status != outcome:
                raise AssertionError(
                    f"replay divergence on {tx.tx_id}: recorded "
                    f"{tx.status}, replayed {outcome}")
    return host
