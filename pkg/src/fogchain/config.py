"""Run configuration.

One RunConfig drives a whole simulation: fleet size, schedules, gas
constants, archive layout, and the price assumptions used for cost
reporting. Everything has a default; a JSON file with any subset of the
field names overrides them, and unknown keys are rejected so typos fail
loudly instead of silently running the defaults.
"""

import json
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Optional

from .ledger import DEFAULT_SURCHARGES, GasSchedule


@dataclass
class RunConfig:
    seed: int = 42
    device_count: int = 50
    benchmark: Optional[str] = None      # B1..B4 overrides device_count
    duration_ms: int = 3 * 3_600_000
    block_interval_ms: int = 15_000
    window_ms: int = 3_600_000           # archival window
    polling_interval_s: int = 60
    reachability: float = 1.0
    aggregator_count: int = 2
    sink_count: int = 1
    archive_mode: str = "combined"
    hash_size: int = 32
    gas_limit: int = 6_500_000
    g_transaction: int = 21_000
    g_txdatanonzero: int = 68
    g_txdatazero: int = 4
    op_surcharge: dict = field(
        default_factory=lambda: dict(DEFAULT_SURCHARGES))
    gas_price_gwei: float = 100.0
    eth_usd: float = 131.0
    cas_root: Optional[str] = None
    cas_capacity_bytes: Optional[int] = None
    fleet_file: Optional[str] = None

    def gas_schedule(self) -> GasSchedule:
        return GasSchedule(
            gas_limit=self.gas_limit,
            g_transaction=self.g_transaction,
            g_txdatanonzero=self.g_txdatanonzero,
            g_txdatazero=self.g_txdatazero,
            op_surcharge=dict(self.op_surcharge),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, overrides: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**overrides)
        if cfg.benchmark is not None:
            from .devices import BENCHMARKS
            if cfg.benchmark not in BENCHMARKS:
                raise ValueError(f"unknown benchmark {cfg.benchmark!r}")
            cfg.device_count = BENCHMARKS[cfg.benchmark]
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
