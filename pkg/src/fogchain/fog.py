"""Fog layer: aggregator and sink nodes.

Aggregators do the data-plane work. Each one polls its assigned devices
on their own schedule, writes readings into its embedded time-series
store, and runs the policy engine over every new sample.

The sink is the control plane. It listens to ledger events and fans the
registry changes out to aggregators round-robin, and once per archival
window it drains each closed window, puts the archive document in the
content store, and submits the digests to the ledger in capacity-sized
batches. Submission is fire-and-forget: the sink never blocks waiting
for a block, it just tracks what it has already sent.

With several sinks, ownership of a device id is decided by hashing it
across the sink count, so every event is handled exactly once.
"""

import hashlib
from dataclasses import dataclass
from typing import Optional

from . import contracts
from .cas import ContentStore
from .canonical import canonical_json
from .devices import DeviceGateway
from .errors import DeviceTimeout, FogchainError
from .ledger import Ledger
from .policy import MonitoringPolicy, PolicyEngine
from .tsdb import AlertEvent, Sample, TimeSeriesStore


def policy_from_dict(d: dict) -> MonitoringPolicy:
    return MonitoringPolicy(
        policy_id=d["policy_id"],
        attribute=d["attribute"],
        threshold_type=d["threshold_type"],
        threshold_value=float(d["threshold_value"]),
        max_violations=int(d["max_violations"]),
        criticality=d["criticality"],
    )


@dataclass
class _Managed:
    registration: dict
    next_poll: int  # simulated ms


class AggregatorNode:
    def __init__(self, name: str, gateway: DeviceGateway,
                 window_ms: int = 3_600_000):
        self.name = name
        self.gateway = gateway
        self.tsdb = TimeSeriesStore(window_ms)
        self.engine = PolicyEngine(window_ms)
        self.managed: dict[str, _Managed] = {}
        self.diagnostics: list[dict] = []

    # --- registry fan-out ---------------------------------------------------

    def on_device_added(self, registration: dict,
                        policies: list[MonitoringPolicy], now: int) -> None:
        interval_ms = registration["polling_interval"] * 1000
        self.managed[registration["device_id"]] = _Managed(
            registration=dict(registration),
            next_poll=now + interval_ms,
        )
        self.engine.load_policies(registration["device_id"], policies)

    def on_device_updated(self, registration: dict) -> None:
        entry = self.managed.get(registration["device_id"])
        if entry is None:
            return
        # next_poll stands; the new interval applies from the next poll on
        entry.registration = dict(registration)

    def on_device_deleted(self, device_id: str) -> None:
        self.managed.pop(device_id, None)
        self.engine.drop_device(device_id)

    # --- polling -------------------------------------------------------------

    def earliest_due(self) -> Optional[int]:
        if not self.managed:
            return None
        return min(m.next_poll for m in self.managed.values())

    def poll_due(self, now: int) -> tuple[list[Sample], list[AlertEvent]]:
        """Run every poll scheduled at or before now, at its own stamp.

        A node that fell behind catches up one interval at a time, so a
        300 s gap on a 60 s device still yields five samples.
        """
        samples: list[Sample] = []
        alerts: list[AlertEvent] = []
        for device_id in sorted(self.managed):
            entry = self.managed[device_id]
            reg = entry.registration
            while entry.next_poll <= now:
                t = entry.next_poll
                entry.next_poll = t + reg["polling_interval"] * 1000
                try:
                    readings = self.gateway.poll(
                        device_id, reg["target_attributes"], t)
                except DeviceTimeout:
                    self.diagnostics.append(
                        {"t": t, "device_id": device_id, "error": "timeout"})
                    continue
                except FogchainError as exc:
                    self.diagnostics.append(
                        {"t": t, "device_id": device_id, "error": str(exc)})
                    continue
                for attribute in reg["target_attributes"]:
                    sample = Sample(device_id, attribute,
                                    readings[attribute], t)
                    self.tsdb.write_sample(sample)
                    samples.append(sample)
                    for alert in self.engine.process(sample):
                        self.tsdb.write_event(alert)
                        alerts.append(alert)
        return samples, alerts


@dataclass
class _Owned:
    aggregator: AggregatorNode
    last_anchored: int  # highest window index already submitted


class SinkNode:
    def __init__(self, name: str, ledger: Ledger,
                 host: "contracts.ContractHost", cas: ContentStore,
                 aggregators: list[AggregatorNode],
                 window_ms: int = 3_600_000,
                 sink_index: int = 0, sink_count: int = 1):
        if not aggregators:
            raise ValueError("sink needs at least one aggregator")
        self.name = name
        self.ledger = ledger
        self.host = host
        self.cas = cas
        self.aggregators = aggregators
        self.window_ms = window_ms
        self.sink_index = sink_index
        self.sink_count = sink_count
        self.owned: dict[str, _Owned] = {}
        self._rr = 0
        self._sub = ledger.subscribe()

    def _owns(self, device_id: str) -> bool:
        if self.sink_count <= 1:
            return True
        digest = hashlib.sha256(device_id.encode()).digest()
        return int.from_bytes(digest[:4], "big") % self.sink_count == self.sink_index

    # --- event dispatch ----------------------------------------------------

    def dispatch(self, now: int) -> int:
        """Drain the ledger subscription and fan out. Returns event count."""
        events = self._sub.poll()
        for event in events:
            kind, payload = event.kind, event.payload
            device_id = payload.get("device_id") or ""
            if kind == contracts.EV_HASHES_ANCHORED:
                continue  # our own anchors coming back around
            if not self._owns(device_id):
                continue
            if kind == contracts.EV_DEVICE_ADDED:
                agg = self.aggregators[self._rr % len(self.aggregators)]
                self._rr += 1
                self.owned[device_id] = _Owned(
                    aggregator=agg,
                    last_anchored=now // self.window_ms - 1,
                )
                policies = [
                    policy_from_dict(p)
                    for p in self.host.get_policies(device_id)
                ]
                agg.on_device_added(payload, policies, now)
            elif kind == contracts.EV_DEVICE_UPDATED:
                entry = self.owned.get(device_id)
                if entry:
                    entry.aggregator.on_device_updated(payload)
            elif kind == contracts.EV_DEVICE_DELETED:
                entry = self.owned.pop(device_id, None)
                if entry:
                    entry.aggregator.on_device_deleted(device_id)
            elif kind == contracts.EV_POLICY_ADDED:
                entry = self.owned.get(device_id)
                if entry:
                    entry.aggregator.engine.add_policy(
                        device_id, policy_from_dict(payload["policy"]))
            elif kind == contracts.EV_POLICY_UPDATED:
                entry = self.owned.get(device_id)
                if entry:
                    entry.aggregator.engine.update_policy(
                        device_id, policy_from_dict(payload["policy"]))
            elif kind == contracts.EV_POLICY_DELETED:
                entry = self.owned.get(device_id)
                if entry:
                    entry.aggregator.engine.remove_policy(
                        device_id, payload["policy_id"])
        return len(events)

    # --- archival ------------------------------------------------------------

    def archival_tick(self, now: int) -> list[str]:
        """Anchor every closed, not-yet-anchored window of owned devices.

        Digest batches are chunked to the contract's batch capacity and
        each chunk is submitted as one transaction, without waiting for
        confirmation.
        """
        current = now // self.window_ms
        entries = []
        for device_id in sorted(self.owned):
            entry = self.owned[device_id]
            for index in range(entry.last_anchored + 1, current):
                samples, events = entry.aggregator.tsdb.drain_window(
                    entry.aggregator.tsdb.window(device_id, index), now)
                docs = contracts.build_archive_objects(
                    device_id, index, samples, events, self.host.archive_mode)
                hashes = [self.cas.put(canonical_json(doc)) for doc in docs]
                row = {
                    "device_id": device_id,
                    "window_index": index,
                    "data_hash": hashes[0],
                }
                if self.host.archive_mode == contracts.ARCHIVE_SPLIT:
                    row["events_hash"] = hashes[1]
                entries.append(row)
                entry.last_anchored = index
        tx_ids = []
        capacity = self.host.batch_capacity
        for i in range(0, len(entries), capacity):
            op, payload, args = contracts.encode_append_hashes(
                entries[i:i + capacity])
            tx_ids.append(self.ledger.submit(op, payload, args, now))
        return tx_ids
