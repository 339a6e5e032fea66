"""Threshold policies and the violation-counting engine.

A policy watches one attribute against one bound. Maximum policies are
violated strictly above the threshold, Minimum policies strictly below;
a sample equal to the threshold is compliant either way. Violations
accumulate per (device, policy) inside an archival window, and the alert
fires on the sample that pushes the count past max_violations. After
firing, the counter starts over. Counters also start over when the
window rolls and when the policy itself is rewritten.

The core evaluate() is a pure function so it can be replayed against
recorded inputs; PolicyEngine adds the bookkeeping that the aggregator
node drives from ledger events.
"""

import math
from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import InvalidPolicy
from .tsdb import AlertEvent, Sample

THRESHOLD_MAXIMUM = "Maximum"
THRESHOLD_MINIMUM = "Minimum"
THRESHOLD_TYPES = (THRESHOLD_MAXIMUM, THRESHOLD_MINIMUM)

CRITICALITY_LEVELS = ("Low", "Medium", "High")


@dataclass(frozen=True)
class MonitoringPolicy:
    policy_id: str
    attribute: str
    threshold_type: str
    threshold_value: float
    max_violations: int
    criticality: str

    def to_dict(self) -> dict:
        return {
            "policy_id": self.policy_id,
            "attribute": self.attribute,
            "threshold_type": self.threshold_type,
            "threshold_value": self.threshold_value,
            "max_violations": self.max_violations,
            "criticality": self.criticality,
        }


def validate_policy_args(args: Mapping) -> None:
    """Reject malformed policy fields. Raises InvalidPolicy."""
    attribute = args.get("attribute")
    if not isinstance(attribute, str) or not attribute:
        raise InvalidPolicy("attribute must be a non-empty string")
    ttype = args.get("threshold_type")
    if ttype not in THRESHOLD_TYPES:
        raise InvalidPolicy(f"threshold_type must be one of {THRESHOLD_TYPES}")
    value = args.get("threshold_value")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidPolicy("threshold_value must be a number")
    if not math.isfinite(value):
        raise InvalidPolicy("threshold_value must be finite")
    maxv = args.get("max_violations")
    if isinstance(maxv, bool) or not isinstance(maxv, int) or maxv < 0:
        raise InvalidPolicy("max_violations must be an integer >= 0")
    crit = args.get("criticality")
    if crit not in CRITICALITY_LEVELS:
        raise InvalidPolicy(f"criticality must be one of {CRITICALITY_LEVELS}")


def is_violation(value: float, policy: MonitoringPolicy) -> bool:
    if policy.threshold_type == THRESHOLD_MAXIMUM:
        return value > policy.threshold_value
    return value < policy.threshold_value


def evaluate(
    sample: Sample,
    policies: list[MonitoringPolicy],
    counters: Mapping[str, int],
) -> tuple[dict[str, int], list[AlertEvent]]:
    """Evaluate one sample. Pure: returns (new counters, fired alerts).

    Policies on other attributes are ignored; their counters pass through
    untouched. A fired alert carries the count that crossed the limit,
    then that policy's counter restarts at zero.
    """
    new = dict(counters)
    alerts = []
    for policy in policies:
        if policy.attribute != sample.attribute:
            continue
        if not is_violation(sample.value, policy):
            continue
        count = new.get(policy.policy_id, 0) + 1
        if count > policy.max_violations:
            alerts.append(AlertEvent(
                device_id=sample.device_id,
                attribute=sample.attribute,
                policy_id=policy.policy_id,
                criticality=policy.criticality,
                threshold_type=policy.threshold_type,
                threshold_value=policy.threshold_value,
                violation_count=count,
                value=sample.value,
                timestamp=sample.timestamp,
            ))
            count = 0
        new[policy.policy_id] = count
    return new, alerts


class PolicyEngine:
    """Stateful wrapper an aggregator drives from ledger events."""

    def __init__(self, window_ms: int = 3_600_000):
        self.window_ms = window_ms
        self._policies: dict[str, dict[str, MonitoringPolicy]] = {}
        self._counters: dict[str, dict[str, int]] = {}
        self._window: dict[str, int] = {}

    def load_policies(self, device_id: str,
                      policies: list[MonitoringPolicy]) -> None:
        """Install the full policy list for a device, counters cleared."""
        self._policies[device_id] = {p.policy_id: p for p in policies}
        self._counters[device_id] = {}

    def add_policy(self, device_id: str, policy: MonitoringPolicy) -> None:
        self._policies.setdefault(device_id, {})[policy.policy_id] = policy
        self._counters.setdefault(device_id, {}).pop(policy.policy_id, None)

    def update_policy(self, device_id: str, policy: MonitoringPolicy) -> None:
        # a rewritten policy starts counting fresh
        self.add_policy(device_id, policy)

    def remove_policy(self, device_id: str, policy_id: str) -> None:
        self._policies.get(device_id, {}).pop(policy_id, None)
        self._counters.get(device_id, {}).pop(policy_id, None)

    def drop_device(self, device_id: str) -> None:
        self._policies.pop(device_id, None)
        self._counters.pop(device_id, None)
        self._window.pop(device_id, None)

    def policies_for(self, device_id: str) -> list[MonitoringPolicy]:
        return list(self._policies.get(device_id, {}).values())

    def counters_for(self, device_id: str) -> dict[str, int]:
        return dict(self._counters.get(device_id, {}))

    def process(self, sample: Sample) -> list[AlertEvent]:
        """Evaluate a sample, handling window rollover. Returns alerts."""
        device_id = sample.device_id
        window_index = sample.timestamp // self.window_ms
        last: Optional[int] = self._window.get(device_id)
        if last is not None and window_index != last:
            self._counters[device_id] = {}
        self._window[device_id] = window_index
        policies = self.policies_for(device_id)
        counters = self._counters.setdefault(device_id, {})
        new_counters, alerts = evaluate(sample, policies, counters)
        self._counters[device_id] = new_counters
        return alerts
