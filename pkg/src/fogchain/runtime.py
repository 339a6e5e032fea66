"""Single-process simulation harness.

One System owns the clock, the ledger with both contracts, the content
store, the gateway fronting the simulated fleet, and the fog nodes. Its
loop is a discrete-event scheduler over three tick sources: device polls
(per-device cadence), block production (fixed interval), and archival
(window boundary). Ties at a timestamp always run polls first, then the
block, then archival, so equal-seed runs replay the exact same order and
the exports come out byte for byte identical.

The journal is the outward event feed: every contract event and every
raised alert, one sequence number, in the order they happened.
"""

from pathlib import Path
from typing import Optional

from . import contracts
from .canonical import canonical_str
from .cas import ContentStore, hash_from_hex
from .config import RunConfig
from .devices import (
    DeviceGateway,
    DeviceSpec,
    default_generators,
    derive_device_seed,
    fleet_for_benchmark,
    load_fleet_file,
    spawn_fleet,
)
from .errors import InvalidRange, MissingArchive, NotFound, UnknownDevice
from .fog import AggregatorNode, SinkNode
from .ledger import Ledger
from .runtime_history import merge_history
from .clock import SimClock


COMPONENTS = ("polls", "blocks", "archival")


class System:
    def __init__(self, config: Optional[RunConfig] = None,
                 fleet: Optional[list] = None,
                 components: Optional[tuple] = None):
        self.config = config or RunConfig()
        self.components = frozenset(components or COMPONENTS)
        unknown = self.components - set(COMPONENTS)
        if unknown:
            raise ValueError(f"unknown components {sorted(unknown)}")
        cfg = self.config
        self.clock = SimClock(0)
        self.schedule = cfg.gas_schedule()
        self.host = contracts.ContractHost(
            schedule=self.schedule,
            hash_size=cfg.hash_size,
            archive_mode=cfg.archive_mode,
        )
        self.ledger = Ledger(self.schedule, self.host.apply_tx)
        self.cas = ContentStore(
            root=Path(cfg.cas_root) if cfg.cas_root else None,
            capacity_bytes=cfg.cas_capacity_bytes,
        )
        self.gateway = DeviceGateway()
        self.aggregators = [
            AggregatorNode(f"agg-{i + 1}", self.gateway, cfg.window_ms)
            for i in range(max(1, cfg.aggregator_count))
        ]
        sink_count = max(1, cfg.sink_count)
        self.sinks = [
            SinkNode(f"sink-{i + 1}", self.ledger, self.host, self.cas,
                     self.aggregators, cfg.window_ms,
                     sink_index=i, sink_count=sink_count)
            for i in range(sink_count)
        ]
        self.journal: list[dict] = []
        self._journal_sub = self.ledger.subscribe()
        self._conjure_sub = self.ledger.subscribe(
            kinds=(contracts.EV_DEVICE_ADDED, contracts.EV_DEVICE_UPDATED))
        self._conjured: set[str] = set()
        self._next_block = cfg.block_interval_ms
        self._next_archive = cfg.window_ms
        self.samples_total = 0
        self.alerts_total = 0
        if fleet is None:
            fleet = self._default_fleet()
        for spec in fleet:
            self.gateway.attach(spec)
        self.fleet = {spec.device_id: spec for spec in fleet}

    def _default_fleet(self) -> list:
        cfg = self.config
        if cfg.fleet_file:
            return load_fleet_file(cfg.fleet_file, cfg.seed)
        if cfg.benchmark:
            return fleet_for_benchmark(cfg.benchmark, cfg.seed,
                                       cfg.polling_interval_s)
        return spawn_fleet(cfg.device_count, cfg.seed,
                           cfg.polling_interval_s,
                           reachability=cfg.reachability)

    # --- journal -----------------------------------------------------------

    def _journal_alerts(self, alerts) -> None:
        for alert in alerts:
            self.journal.append({
                "seq": len(self.journal),
                "t": alert.timestamp,
                "kind": "AlertRaised",
                "payload": {"device_id": alert.device_id,
                            **contracts.event_row(alert)},
            })
        self.alerts_total += len(alerts)

    def _journal_ledger_events(self) -> None:
        for event in self._journal_sub.poll():
            self.journal.append({
                "seq": len(self.journal),
                "t": self.clock.now_ms,
                "kind": event.kind,
                "payload": event.payload,
                "block_height": event.block_height,
                "tx_id": event.tx_id,
            })

    # --- fleet backing for operator-registered devices -------------------------

    def _conjure_devices(self) -> None:
        """Give ledger-registered unknown ids a simulated physical device.

        The fleet spawned at startup is the hardware that exists; a
        registration for some other id (an operator adding a device over
        the API) conjures one deterministically from the master seed, so
        polls serve it values instead of timing out forever. Fleet
        hardware is never overwritten; a conjured device follows its
        registration updates.
        """
        for event in self._conjure_sub.poll():
            payload = event.payload
            device_id = payload["device_id"]
            if device_id in self.fleet and device_id not in self._conjured:
                continue
            attrs = list(payload["target_attributes"])
            spec = DeviceSpec(
                device_id=device_id,
                ip_address=payload["ip_address"],
                model=payload["model"],
                polling_interval=payload["polling_interval"],
                target_attributes=attrs,
                credentials=payload["credentials"],
                generators=default_generators(attrs),
                seed=derive_device_seed(self.config.seed, device_id),
                reachability=self.config.reachability,
            )
            self.gateway.attach(spec)
            self.fleet[device_id] = spec
            self._conjured.add(device_id)

    # --- tick handlers --------------------------------------------------------

    def _run_polls(self, now: int) -> None:
        for agg in self.aggregators:
            due = agg.earliest_due()
            if due is None or due > now:
                continue
            samples, alerts = agg.poll_due(now)
            self.samples_total += len(samples)
            self._journal_alerts(alerts)

    def _run_block(self, now: int) -> None:
        self.ledger.produce_block(now)
        self._conjure_devices()
        for sink in self.sinks:
            sink.dispatch(now)
        self._journal_ledger_events()

    def _run_archival(self, now: int) -> None:
        for sink in self.sinks:
            sink.archival_tick(now)

    # --- main loop ---------------------------------------------------------------

    def run_until(self, t_end_ms: int) -> None:
        if t_end_ms < self.clock.now_ms:
            raise ValueError("cannot run backwards")
        while True:
            ticks = [t_end_ms, self._next_block, self._next_archive]
            for agg in self.aggregators:
                due = agg.earliest_due()
                if due is not None:
                    ticks.append(due)
            t = min(tick for tick in ticks if tick >= self.clock.now_ms)
            t = min(t, t_end_ms)
            self.clock.advance_to(t)
            if "polls" in self.components:
                self._run_polls(t)
            if t == self._next_block:
                self._next_block += self.config.block_interval_ms
                if "blocks" in self.components:
                    self._run_block(t)
            if t == self._next_archive:
                self._next_archive += self.config.window_ms
                if "archival" in self.components:
                    self._run_archival(t)
            if t >= t_end_ms:
                return

    def settle(self) -> None:
        """Flush the mempool outside the block schedule (end of a run)."""
        self.ledger.settle(self.clock.now_ms)
        self._conjure_devices()
        for sink in self.sinks:
            sink.dispatch(self.clock.now_ms)
        self._journal_ledger_events()

    # --- write helpers (validated upstream by the API layer) -----------------------

    def _submit(self, encoded) -> str:
        op, payload, args = encoded
        return self.ledger.submit(op, payload, args, self.clock.now_ms)

    def submit_add_device(self, profile: dict) -> str:
        return self._submit(contracts.encode_add_device(profile))

    def submit_update_device(self, profile: dict) -> str:
        return self._submit(contracts.encode_update_device(profile))

    def submit_delete_device(self, device_id: str) -> str:
        return self._submit(contracts.encode_delete_device(device_id))

    def submit_add_policy(self, device_id: str, policy: dict) -> str:
        return self._submit(contracts.encode_add_policy(device_id, policy))

    def submit_update_policy(self, device_id: str, policy_id: str,
                             policy: dict) -> str:
        return self._submit(
            contracts.encode_update_policy(device_id, policy_id, policy))

    def submit_delete_policy(self, device_id: str, policy_id: str) -> str:
        return self._submit(
            contracts.encode_delete_policy(device_id, policy_id))

    # --- reads ------------------------------------------------------------------------

    def history(self, device_id: str, frm: int, to: int) -> dict:
        if frm > to:
            raise InvalidRange(f"from {frm} > to {to}")
        if device_id not in self.host.devices:
            raise UnknownDevice(device_id)
        return merge_history(self, device_id, frm, to)

    def metrics(self) -> dict:
        archived = sum(
            len(r.archives) for r in self.host.devices.values())
        return {
            "sim_now_ms": self.clock.now_ms,
            "block_height": self.ledger.height,
            "pending_txs": self.ledger.pending_count,
            "devices": len(self.host.list_devices()),
            "samples_total": self.samples_total,
            "alerts_total": self.alerts_total,
            "archived_windows": archived,
            "poll_timeouts": self.gateway.timeouts,
            "cas_objects": len(self.cas),
            "cas_bytes": self.cas.total_bytes,
            "gas": self.ledger.gas_stats(),
        }

    # --- exports -----------------------------------------------------------------------

    def export_state_json(self) -> str:
        return canonical_str(self.host.export_state()) + "\n"

    def export_blocks_ndjson(self) -> str:
        return self.ledger.export_blocks_ndjson()

    def export_journal_ndjson(self) -> str:
        lines = [canonical_str(entry) for entry in self.journal]
        return "\n".join(lines) + ("\n" if lines else "")
