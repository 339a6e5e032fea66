import random

import pytest

from fogchain.errors import InvalidPolicy
from fogchain.policy import (
    MonitoringPolicy,
    PolicyEngine,
    evaluate,
    is_violation,
    validate_policy_args,
)
from fogchain.tsdb import Sample

from oracles import brute_force_alerts

HOUR = 3_600_000


def make_policy(pid="p-0001", attr="temperature", ttype="Minimum",
                value=10.0, maxv=5, crit="Medium"):
    return MonitoringPolicy(pid, attr, ttype, value, maxv, crit)


def test_threshold_semantics_equality_is_compliant():
    low = make_policy(ttype="Minimum", value=10.0)
    high = make_policy(ttype="Maximum", value=30.0)
    assert is_violation(9.99, low)
    assert not is_violation(10.0, low)      # equal is fine
    assert not is_violation(10.01, low)
    assert is_violation(30.01, high)
    assert not is_violation(30.0, high)     # equal is fine
    assert not is_violation(29.99, high)


def test_alert_fires_on_count_past_limit():
    # Minimum 10, five tolerated violations: the sixth violating sample
    # (value 4 below) is the one that raises, at count six.
    engine = PolicyEngine(HOUR)
    engine.load_policies("d1", [make_policy(maxv=5)])
    stream = [12, 9, 8, 11, 7, 6, 5, 4]
    alerts = []
    for i, value in enumerate(stream):
        alerts += engine.process(Sample("d1", "temperature", value, i * 1000))
    assert len(alerts) == 1
    alert = alerts[0]
    assert alert.value == 4
    assert alert.violation_count == 6
    assert alert.criticality == "Medium"
    assert alert.policy_id == "p-0001"


def test_counter_restarts_after_firing():
    engine = PolicyEngine(HOUR)
    engine.load_policies("d1", [make_policy(maxv=1)])
    fired = []
    for i, value in enumerate([5, 5, 5, 5, 5, 5]):
        fired += engine.process(Sample("d1", "temperature", value, i))
    # fires at counts 2, 2, 2: samples 2, 4, 6
    assert [a.violation_count for a in fired] == [2, 2, 2]
    assert len(fired) == 3


def test_window_rollover_resets_counters():
    engine = PolicyEngine(HOUR)
    engine.load_policies("d1", [make_policy(maxv=2)])
    for t in (100, 200):  # two violations in window 0
        assert engine.process(Sample("d1", "temperature", 1.0, t)) == []
    # third violation lands in window 1: counter restarted, no alert
    assert engine.process(Sample("d1", "temperature", 1.0, HOUR + 5)) == []
    assert engine.counters_for("d1") == {"p-0001": 1}


def test_policy_update_resets_counter():
    engine = PolicyEngine(HOUR)
    engine.load_policies("d1", [make_policy(maxv=2)])
    engine.process(Sample("d1", "temperature", 1.0, 10))
    engine.process(Sample("d1", "temperature", 1.0, 20))
    assert engine.counters_for("d1")["p-0001"] == 2
    engine.update_policy("d1", make_policy(maxv=2, value=12.0))
    assert engine.counters_for("d1") == {}
    assert engine.process(Sample("d1", "temperature", 1.0, 30)) == []


def test_policies_count_independently():
    engine = PolicyEngine(HOUR)
    engine.load_policies("d1", [
        make_policy(pid="p-0001", ttype="Minimum", value=10.0, maxv=0),
        make_policy(pid="p-0002", ttype="Maximum", value=30.0, maxv=0,
                    crit="High"),
    ])
    alerts = engine.process(Sample("d1", "temperature", 5.0, 10))
    assert [a.policy_id for a in alerts] == ["p-0001"]
    alerts = engine.process(Sample("d1", "temperature", 35.0, 20))
    assert [a.policy_id for a in alerts] == ["p-0002"]
    assert alerts[0].criticality == "High"


def test_other_attributes_ignored():
    engine = PolicyEngine(HOUR)
    engine.load_policies("d1", [make_policy(attr="temperature", maxv=0)])
    assert engine.process(Sample("d1", "humidity", -100.0, 10)) == []


def test_evaluate_is_pure():
    policy = make_policy(maxv=1)
    sample = Sample("d1", "temperature", 2.0, 50)
    counters = {"p-0001": 1}
    out1 = evaluate(sample, [policy], counters)
    out2 = evaluate(sample, [policy], counters)
    assert out1 == out2
    assert counters == {"p-0001": 1}  # input untouched
    new, alerts = out1
    assert new == {"p-0001": 0}
    assert len(alerts) == 1


def test_validate_policy_args():
    good = {"attribute": "temperature", "threshold_type": "Minimum",
            "threshold_value": 10.0, "max_violations": 5,
            "criticality": "Medium"}
    validate_policy_args(good)
    for field, bad in [
        ("attribute", ""),
        ("threshold_type", "Between"),
        ("threshold_value", "ten"),
        ("threshold_value", float("nan")),
        ("max_violations", -1),
        ("max_violations", 2.5),
        ("max_violations", True),
        ("criticality", "Severe"),
    ]:
        with pytest.raises(InvalidPolicy):
            validate_policy_args({**good, field: bad})


def test_engine_matches_brute_force_oracle():
    rng = random.Random(7331)
    for _ in range(50):
        n_policies = rng.randrange(1, 6)
        policies = []
        for i in range(n_policies):
            policies.append(MonitoringPolicy(
                policy_id=f"p-{i + 1:04d}",
                attribute=rng.choice(("temperature", "humidity")),
                threshold_type=rng.choice(("Minimum", "Maximum")),
                threshold_value=rng.uniform(-5, 5),
                max_violations=rng.randrange(0, 4),
                criticality=rng.choice(("Low", "Medium", "High")),
            ))
        stream = []
        t = 0
        for _ in range(rng.randrange(1, 300)):
            t += rng.randrange(1, 600_000)
            stream.append((t, rng.choice(("temperature", "humidity")),
                           rng.uniform(-10, 10)))
        engine = PolicyEngine(HOUR)
        engine.load_policies("d1", policies)
        got = []
        for (ts, attr, value) in stream:
            for alert in engine.process(Sample("d1", attr, value, ts)):
                got.append((alert.timestamp, alert.policy_id,
                            alert.violation_count))
        got.sort()
        expected = brute_force_alerts(stream, policies, HOUR)
        assert got == expected
