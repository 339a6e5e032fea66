"""Benchmark runs and the gas-to-dollar conversion.

A benchmark registers a fleet, gives every device the same default
minimum-temperature policy, and lets the system run for the configured
duration. Everything in the report is a simulated quantity (gas, block
heights, simulated latencies) except the read_latency_ms section, which
times the read interactions on the wall clock; two same-seed runs agree
byte for byte everywhere outside that one section.
"""

import time
from typing import Optional

from .config import RunConfig
from .contracts import CANONICAL_POLICY
from .runtime import System


def cost_to_usd(gas: float, gas_price_gwei: float = 100.0,
                eth_usd: float = 131.0) -> float:
    """Dollars for a gas amount at a gas price and an exchange rate.

    gas * gwei is priced in gwei; 1e-9 converts to the base currency.
    """
    return gas * gas_price_gwei * 1e-9 * eth_usd


def default_policy() -> dict:
    return dict(CANONICAL_POLICY)


def run_benchmark(config: Optional[RunConfig] = None,
                  system: Optional[System] = None) -> tuple[dict, System]:
    """Run one benchmark to completion and summarize it."""
    if system is None:
        system = System(config)
    cfg = system.config

    for device_id in sorted(system.fleet):
        system.submit_add_device(system.fleet[device_id].registration())
    for device_id in sorted(system.fleet):
        system.submit_add_policy(device_id, default_policy())

    system.run_until(cfg.duration_ms)
    system.settle()  # let the tail of the mempool land before reporting

    return build_report(system), system


def confirm_latencies_ms(system: System) -> dict[str, list[int]]:
    """Simulated submit-to-block latency per operation kind."""
    out: dict[str, list[int]] = {}
    for block in system.ledger.blocks:
        for tx in block.txs:
            out.setdefault(tx.op_kind, []).append(
                block.timestamp - tx.submitted_at)
    return out


def measure_read_latencies(system: System, reps: int = 25) -> dict:
    """Wall-clock timing of each read interaction, in milliseconds.

    Reads never touch the block schedule, so there is no simulated
    latency to report; what varies is plain execution time. This is the
    only nondeterministic section of a report.
    """
    live = [device_id for device_id, record in
            sorted(system.host.devices.items()) if not record.deleted]
    probes = {"list_devices": lambda: system.host.list_devices()}
    if live:
        first = live[0]
        window_ms = system.config.window_ms
        probes["get_device"] = lambda: system.host.get_device(first)
        probes["get_policies"] = lambda: system.host.get_policies(first)
        probes["get_archives"] = lambda: system.host.get_hashes(first)
        probes["history"] = lambda: system.history(first, 0, window_ms)
    out = {}
    for name in sorted(probes):
        probe = probes[name]
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            probe()
            times.append((time.perf_counter() - t0) * 1000.0)
        times.sort()
        out[name] = {
            "avg_ms": sum(times) / len(times),
            "p50_ms": times[len(times) // 2],
            "p95_ms": times[min(len(times) - 1, int(len(times) * 0.95))],
        }
    return out

def build_report(system: System) -> dict:
    cfg = system.config
    metrics = system.metrics()
    latencies = confirm_latencies_ms(system)
    ops = {}
    total_gas = 0
    for op_kind, stat in sorted(metrics["gas"].items()):
        lat = latencies.get(op_kind, [])
        ops[op_kind] = {
            "count": stat["count"],
            "avg_gas": stat["avg_gas"],
            "min_gas": stat["min_gas"],
            "max_gas": stat["max_gas"],
            "avg_cost_usd": cost_to_usd(
                stat["avg_gas"], cfg.gas_price_gwei, cfg.eth_usd),
            "avg_confirm_ms": (sum(lat) / len(lat)) if lat else None,
        }
        total_gas += stat["total_gas"]
    return {
        "benchmark": cfg.benchmark or f"custom-{cfg.device_count}",
        "device_count": cfg.device_count,
        "seed": cfg.seed,
        "duration_ms": cfg.duration_ms,
        "archive_mode": cfg.archive_mode,
        "batch_capacity": system.host.batch_capacity,
        "block_height": metrics["block_height"],
        "pending_txs": metrics["pending_txs"],
        "samples_total": metrics["samples_total"],
        "alerts_total": metrics["alerts_total"],
        "archived_windows": metrics["archived_windows"],
        "poll_timeouts": metrics["poll_timeouts"],
        "cas_objects": metrics["cas_objects"],
        "cas_bytes": metrics["cas_bytes"],
        "price": {"gas_price_gwei": cfg.gas_price_gwei,
                  "eth_usd": cfg.eth_usd},
        "total_gas": total_gas,
        "total_cost_usd": cost_to_usd(
            total_gas, cfg.gas_price_gwei, cfg.eth_usd),
        "ops": ops,
        "read_latency_ms": measure_read_latencies(system),
    }
