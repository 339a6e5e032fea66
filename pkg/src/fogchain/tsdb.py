"""Embedded time-series store for an aggregator node.

Samples and alert events append to per-device logs. Range queries are
half-open [from, to) and ordered by (timestamp, insertion order); equal
timestamps are legal and both records survive. Hourly archival drains a
window exactly once, but draining never deletes anything: the log keeps
serving live reads after the window has been anchored.
"""

from dataclasses import dataclass, field, asdict
from typing import Optional

from .canonical import canonical_str
from .errors import AlreadyDrained, InvalidRange, WindowNotClosed


@dataclass(frozen=True)
class Sample:
    device_id: str
    attribute: str
    value: float
    timestamp: int  # simulated ms


@dataclass(frozen=True)
class AlertEvent:
    """Threshold-violation alert produced by the policy engine."""
    device_id: str
    attribute: str
    policy_id: str
    criticality: str
    threshold_type: str
    threshold_value: float
    violation_count: int
    value: float
    timestamp: int


@dataclass(frozen=True)
class WindowRef:
    device_id: str
    window_index: int
    start: int  # inclusive, simulated ms
    end: int    # exclusive


@dataclass
class _DeviceLog:
    samples: list[Sample] = field(default_factory=list)
    events: list[AlertEvent] = field(default_factory=list)
    drained: set[int] = field(default_factory=set)


class TimeSeriesStore:
    def __init__(self, window_ms: int = 3_600_000):
        if window_ms <= 0:
            raise ValueError("window_ms must be positive")
        self.window_ms = window_ms
        self._logs: dict[str, _DeviceLog] = {}

    def _log(self, device_id: str) -> _DeviceLog:
        return self._logs.setdefault(device_id, _DeviceLog())

    # --- writes -----------------------------------------------------------

    def write_sample(self, sample: Sample) -> None:
        self._log(sample.device_id).samples.append(sample)

    def write_event(self, event: AlertEvent) -> None:
        self._log(event.device_id).events.append(event)

    # --- reads ------------------------------------------------------------

    @staticmethod
    def _check_range(frm: int, to: int) -> None:
        if frm > to:
            raise InvalidRange(f"from {frm} > to {to}")

    def query_range(self, device_id: str, frm: int, to: int,
                    attribute: Optional[str] = None) -> list[Sample]:
        self._check_range(frm, to)
        log = self._logs.get(device_id)
        if log is None:
            return []
        out = [s for s in log.samples if frm <= s.timestamp < to]
        if attribute is not None:
            out = [s for s in out if s.attribute == attribute]
        out.sort(key=lambda s: s.timestamp)  # stable: ties keep write order
        return out

    def query_events_range(self, device_id: str, frm: int,
                           to: int) -> list[AlertEvent]:
        self._check_range(frm, to)
        log = self._logs.get(device_id)
        if log is None:
            return []
        out = [e for e in log.events if frm <= e.timestamp < to]
        out.sort(key=lambda e: e.timestamp)
        return out

    def device_ids(self) -> list[str]:
        return sorted(self._logs)

    # --- archival windows ---------------------------------------------------

    def window(self, device_id: str, window_index: int) -> WindowRef:
        """Build the WindowRef for this store's window grid."""
        if window_index < 0:
            raise ValueError("window_index must be >= 0")
        start = window_index * self.window_ms
        return WindowRef(device_id, window_index, start, start + self.window_ms)

    def drain_window(self, ref: WindowRef,
                     now: int) -> tuple[list[Sample], list[AlertEvent]]:
        """Return the window's records for archival, exactly once.

        The window must have fully elapsed (ref.end <= now). Records stay
        in the log; only the drained marker is recorded.
        """
        expected = self.window(ref.device_id, ref.window_index)
        if (ref.start, ref.end) != (expected.start, expected.end):
            raise ValueError(f"window ref off the {self.window_ms}ms grid: {ref}")
        if ref.end > now:
            raise WindowNotClosed(
                f"window {ref.window_index} of {ref.device_id} ends at "
                f"{ref.end}, now is {now}")
        log = self._log(ref.device_id)
        if ref.window_index in log.drained:
            raise AlreadyDrained(
                f"window {ref.window_index} of {ref.device_id}")
        log.drained.add(ref.window_index)
        samples = self.query_range(ref.device_id, ref.start, ref.end)
        events = self.query_events_range(ref.device_id, ref.start, ref.end)
        return samples, events

    def is_drained(self, device_id: str, window_index: int) -> bool:
        log = self._logs.get(device_id)
        return log is not None and window_index in log.drained

    # --- export -------------------------------------------------------------

    def export_ndjson(self, device_id: str) -> str:
        """Write-ordered dump of one device's log, one JSON object per line."""
        log = self._logs.get(device_id)
        if log is None:
            return ""
        lines = []
        for s in log.samples:
            lines.append(canonical_str({"type": "sample", **asdict(s)}))
        for e in log.events:
            lines.append(canonical_str({"type": "event", **asdict(e)}))
        return "\n".join(lines) + ("\n" if lines else "")
