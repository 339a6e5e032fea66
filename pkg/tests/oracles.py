"""Independent reference implementations the tests compare against.

These are deliberately written differently from the package code: the
batch capacity oracle subtracts instead of dividing, the range oracle is
a naive filter, and the alert oracle rescans the whole stream once per
policy instead of threading counter state sample by sample. Agreement
between two structurally different routes is the point.
"""


def capacity_by_subtraction(gas_limit: int, g_transaction: int,
                            g_per_byte: int, entry_bytes: int) -> int:
    """How many entries fit: repeated subtraction, no division."""
    budget = gas_limit - g_transaction
    per_entry = g_per_byte * entry_bytes
    count = 0
    while budget >= per_entry:
        budget -= per_entry
        count += 1
    return count


def naive_range(samples, frm: int, to: int):
    """[from, to) filter preserving insertion order for equal stamps."""
    return [s for s in samples if frm <= s.timestamp < to]


def brute_force_alerts(stream, policies, window_ms: int):
    """Replay the whole stream once per policy, independently.

    stream: list of (timestamp, attribute, value) for one device.
    Returns a list of (timestamp, policy_id, violation_count) sorted by
    (timestamp, policy_id), which is order-insensitive enough to compare
    with the engine's per-sample emission order.
    """
    fired = []
    for policy in policies:
        count = 0
        window = None
        for (timestamp, attribute, value) in stream:
            w = timestamp // window_ms
            if window is None:
                window = w
            elif w != window:
                count = 0
                window = w
            if attribute != policy.attribute:
                continue
            if policy.threshold_type == "Maximum":
                violated = value > policy.threshold_value
            else:
                violated = value < policy.threshold_value
            if not violated:
                continue
            count += 1
            if count > policy.max_violations:
                fired.append((timestamp, policy.policy_id, count))
                count = 0
    fired.sort()
    return fired
