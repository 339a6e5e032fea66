"""Gas-metered ledger simulation.

Transactions queue in a mempool and are packed into blocks FIFO: the
producer walks the queue in submission order and stops at the first
transaction that would push the block past the gas limit. Nothing is
reordered or skipped, so a transaction too large to ever fit parks at
the head of the queue and stalls it; submit() only rejects outright when
the intrinsic gas alone exceeds the limit.

Gas for a transaction is the standard intrinsic charge over its payload
bytes plus a flat per-operation surcharge standing in for the contract's
storage writes. The default surcharges below were calibrated once so
that the canonical single-operation payloads (see contracts.py) land on
the published averages: 137,200 gas to register a device, 199,500 to add
a policy, 134,600 to anchor one archive hash. A failed operation is
still charged and still occupies block space; it just emits no events.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .canonical import canonical_str
from .errors import ContractError, NotFound, OversizedTransaction

# transaction statuses
PENDING = "pending"
CONFIRMED = "confirmed"
FAILED = "failed"

# operation kinds, in dispatch order nothing depends on
OP_ADD_DEVICE = "add_device"
OP_UPDATE_DEVICE = "update_device"
OP_DELETE_DEVICE = "delete_device"
OP_ADD_POLICY = "add_policy"
OP_UPDATE_POLICY = "update_policy"
OP_DELETE_POLICY = "delete_policy"
OP_APPEND_HASHES = "append_hashes"

OP_KINDS = (
    OP_ADD_DEVICE, OP_UPDATE_DEVICE, OP_DELETE_DEVICE,
    OP_ADD_POLICY, OP_UPDATE_POLICY, OP_DELETE_POLICY,
    OP_APPEND_HASHES,
)

# calibrated storage surcharges, gas per operation
DEFAULT_SURCHARGES = {
    OP_ADD_DEVICE: 105_388,
    OP_UPDATE_DEVICE: 105_388,
    OP_DELETE_DEVICE: 105_388,
    OP_ADD_POLICY: 167_892,
    OP_UPDATE_POLICY: 167_892,
    OP_DELETE_POLICY: 167_892,
    OP_APPEND_HASHES: 111_424,
}


@dataclass
class GasSchedule:
    gas_limit: int = 6_500_000
    g_transaction: int = 21_000
    g_txdatanonzero: int = 68
    g_txdatazero: int = 4
    op_surcharge: dict = field(default_factory=lambda: dict(DEFAULT_SURCHARGES))

    def validate(self) -> None:
        for name in ("gas_limit", "g_transaction",
                     "g_txdatanonzero", "g_txdatazero"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")
        if self.gas_limit <= self.g_transaction:
            raise ValueError("gas_limit must exceed g_transaction")
        for kind, v in self.op_surcharge.items():
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"surcharge for {kind} must be >= 0")


def intrinsic_gas(payload: bytes, schedule: GasSchedule) -> int:
    """Base charge for carrying these payload bytes, before any surcharge."""
    zeros = payload.count(0)
    nonzeros = len(payload) - zeros
    return (schedule.g_transaction
            + schedule.g_txdatanonzero * nonzeros
            + schedule.g_txdatazero * zeros)


def max_devices_per_tx(schedule: GasSchedule, hash_size: int = 32) -> int:
    """How many per-device digests one anchoring transaction can carry.

    Worst case every digest byte is nonzero, so capacity is the intrinsic
    budget left after the base charge divided by the cost of one digest.
    """
    if hash_size <= 0:
        raise ValueError("hash_size must be positive")
    budget = schedule.gas_limit - schedule.g_transaction
    return budget // (schedule.g_txdatanonzero * hash_size)


@dataclass
class Transaction:
    tx_id: str
    op_kind: str
    payload: bytes
    args: dict
    submitted_at: int
    status: str = PENDING
    gas_used: Optional[int] = None
    block_height: Optional[int] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "tx_id": self.tx_id,
            "op_kind": self.op_kind,
            "payload_hex": self.payload.hex(),
            "args": self.args,
            "submitted_at": self.submitted_at,
            "status": self.status,
            "gas_used": self.gas_used,
            "block_height": self.block_height,
            "error": self.error,
        }


@dataclass
class Block:
    height: int
    timestamp: int
    txs: list
    gas_total: int

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "timestamp": self.timestamp,
            "gas_total": self.gas_total,
            "txs": [t.to_dict() for t in self.txs],
        }


@dataclass(frozen=True)
class LedgerEvent:
    seq: int
    kind: str
    payload: dict
    block_height: int
    tx_id: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "block_height": self.block_height,
            "tx_id": self.tx_id,
        }


class Subscription:
    """Cursor over the ledger's event journal. poll() never re-delivers."""

    def __init__(self, ledger: "Ledger", kinds: Optional[Iterable[str]]):
        self._ledger = ledger
        self._kinds = frozenset(kinds) if kinds is not None else None
        self._cursor = 0

    def poll(self) -> list[LedgerEvent]:
        events = self._ledger.events[self._cursor:]
        self._cursor = len(self._ledger.events)
        if self._kinds is None:
            return list(events)
        return [e for e in events if e.kind in self._kinds]


# apply_fn takes a Transaction and returns contract events as
# (kind, payload_dict) pairs, or raises ContractError to fail the tx.
ApplyFn = Callable[[Transaction], list[tuple[str, dict]]]


class Ledger:
    def __init__(self, schedule: Optional[GasSchedule] = None,
                 apply_fn: Optional[ApplyFn] = None):
        self.schedule = schedule or GasSchedule()
        self.schedule.validate()
        self._apply = apply_fn or (lambda tx: [])
        self._tx_seq = 0
        self._txs: dict[str, Transaction] = {}
        self._mempool: deque[Transaction] = deque()
        self.events: list[LedgerEvent] = []
        self.blocks: list[Block] = [Block(0, 0, [], 0)]  # genesis

    # --- submission ---------------------------------------------------------

    def submit(self, op_kind: str, payload: bytes, args: dict,
               now: int) -> str:
        base = intrinsic_gas(payload, self.schedule)
        if base > self.schedule.gas_limit:
            raise OversizedTransaction(
                f"intrinsic gas {base} exceeds block limit "
                f"{self.schedule.gas_limit}")
        self._tx_seq += 1
        tx = Transaction(
            tx_id=f"tx-{self._tx_seq:08d}",
            op_kind=op_kind,
            payload=payload,
            args=args,
            submitted_at=now,
        )
        self._txs[tx.tx_id] = tx
        self._mempool.append(tx)
        return tx.tx_id

    # --- block production -----------------------------------------------------

    def produce_block(self, now: int) -> Block:
        """Pack the next block FIFO and apply its transactions."""
        included: list[Transaction] = []
        gas_total = 0
        while self._mempool:
            tx = self._mempool[0]
            gas = (intrinsic_gas(tx.payload, self.schedule)
                   + self.schedule.op_surcharge.get(tx.op_kind, 0))
            if gas_total + gas > self.schedule.gas_limit:
                break  # head stays queued; nothing behind it is considered
            self._mempool.popleft()
            tx.gas_used = gas
            gas_total += gas
            included.append(tx)
        block = Block(
            height=len(self.blocks),
            timestamp=now,
            txs=included,
            gas_total=gas_total,
        )
        for tx in included:
            tx.block_height = block.height
            try:
                emitted = self._apply(tx)
            except ContractError as exc:
                tx.status = FAILED
                tx.error = f"{type(exc).__name__}: {exc}"
                continue
            tx.status = CONFIRMED
            for kind, payload in emitted:
                self.events.append(LedgerEvent(
                    seq=len(self.events),
                    kind=kind,
                    payload=payload,
                    block_height=block.height,
                    tx_id=tx.tx_id,
                ))
        self.blocks.append(block)
        return block

    def settle(self, now: int) -> list[Block]:
        """Produce blocks until the mempool is empty or stalled."""
        out = []
        while self._mempool:
            before = len(self._mempool)
            out.append(self.produce_block(now))
            if len(self._mempool) == before:
                break  # head transaction can never fit
        return out

    # --- queries ---------------------------------------------------------------

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    @property
    def pending_count(self) -> int:
        return len(self._mempool)

    def tx(self, tx_id: str) -> Transaction:
        try:
            return self._txs[tx_id]
        except KeyError:
            raise NotFound(f"no transaction {tx_id}") from None

    def subscribe(self, kinds: Optional[Iterable[str]] = None) -> Subscription:
        return Subscription(self, kinds)

    def gas_stats(self) -> dict:
        """Per-operation gas over all charged (confirmed or failed) txs."""
        stats: dict[str, dict] = {}
        for tx in self._txs.values():
            if tx.gas_used is None:
                continue
            s = stats.setdefault(tx.op_kind, {
                "count": 0, "total_gas": 0,
                "min_gas": tx.gas_used, "max_gas": tx.gas_used,
            })
            s["count"] += 1
            s["total_gas"] += tx.gas_used
            s["min_gas"] = min(s["min_gas"], tx.gas_used)
            s["max_gas"] = max(s["max_gas"], tx.gas_used)
        for s in stats.values():
            s["avg_gas"] = s["total_gas"] / s["count"]
        return stats

    # --- export ------------------------------------------------------------------

    def export_blocks_ndjson(self) -> str:
        lines = [canonical_str(b.to_dict()) for b in self.blocks]
        return "\n".join(lines) + "\n"
