"""Deterministic simulation of a fog-assisted IoT monitoring stack.

Device fleets are polled by fog aggregators, threshold policies raise
alerts, and hourly archives are content-addressed off-chain with their
digests anchored on a gas-metered ledger. See README.md for the layout.
"""

from .bench import cost_to_usd, run_benchmark
from .cas import ContentStore, content_hash
from .config import RunConfig
from .contracts import ContractHost, replay_blocks
from .ledger import GasSchedule, Ledger, intrinsic_gas, max_devices_per_tx
from .policy import MonitoringPolicy, PolicyEngine, evaluate, is_violation
from .runtime import System
from .tsdb import AlertEvent, Sample, TimeSeriesStore

__version__ = "0.1.0"

__all__ = [
    "AlertEvent",
    "ContentStore",
    "ContractHost",
    "GasSchedule",
    "Ledger",
    "MonitoringPolicy",
    "PolicyEngine",
    "RunConfig",
    "Sample",
    "System",
    "TimeSeriesStore",
    "__version__",
    "content_hash",
    "cost_to_usd",
    "evaluate",
    "intrinsic_gas",
    "is_violation",
    "max_devices_per_tx",
    "replay_blocks",
    "run_benchmark",
]
