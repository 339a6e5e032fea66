"""Content-addressed object store.

Objects are keyed by the SHA-256 of their bytes. The store is the
off-chain half of the archival pipeline: the ledger holds only the
32-byte digests, the store holds the archives they name.

Storage is in-memory with an optional directory spill. On disk each
object lives at <root>/<first two hex chars>/<full 64-hex digest>, so a
store can be reopened from the same root and keep serving reads.
"""

import hashlib
from pathlib import Path
from typing import Iterator, Optional

from .errors import NotFound, StorageFull

HASH_SIZE = 32  # bytes of a SHA-256 digest


def content_hash(data: bytes) -> bytes:
    """Digest used as the object key. Always HASH_SIZE bytes."""
    return hashlib.sha256(data).digest()


def hash_to_hex(digest: bytes) -> str:
    if len(digest) != HASH_SIZE:
        raise ValueError(f"expected {HASH_SIZE}-byte digest, got {len(digest)}")
    return digest.hex()


def hash_from_hex(text: str) -> bytes:
    digest = bytes.fromhex(text)
    if len(digest) != HASH_SIZE:
        raise ValueError(f"expected {2 * HASH_SIZE} hex chars, got {len(text)}")
    return digest


class ContentStore:
    """In-memory store with optional directory persistence.

    capacity_bytes caps the sum of stored object sizes; a put that would
    cross it raises StorageFull before anything is written. Re-putting
    bytes that are already present is free and returns the same digest.
    """

    def __init__(self, root: Optional[Path] = None,
                 capacity_bytes: Optional[int] = None):
        self._objects: dict[bytes, bytes] = {}
        self._total_bytes = 0
        self._root = Path(root) if root is not None else None
        self._capacity = capacity_bytes
        self._rejected: list[Path] = []
        if self._root is not None:
            self._root.mkdir(parents=True, exist_ok=True)
            self._load_root()

    def _load_root(self) -> None:
        for path in sorted(self._root.glob("??/" + "?" * 64)):
            data = path.read_bytes()
            digest = content_hash(data)
            if digest.hex() != path.name:
                # foreign or corrupt file; skip rather than crash, but
                # remember it so an audit can surface the damage
                self._rejected.append(path)
                continue
            self._objects[digest] = data
            self._total_bytes += len(data)

    @property
    def rejected(self) -> tuple[Path, ...]:
        """Files under the root that failed digest verification at load."""
        return tuple(self._rejected)

    def _object_path(self, digest: bytes) -> Path:
        hx = digest.hex()
        return self._root / hx[:2] / hx

    def put(self, data: bytes) -> bytes:
        """Store data, return its digest. Idempotent."""
        digest = content_hash(data)
        if digest in self._objects:
            return digest
        if self._capacity is not None:
            if self._total_bytes + len(data) > self._capacity:
                raise StorageFull(
                    f"put of {len(data)} bytes exceeds capacity "
                    f"{self._capacity} (used {self._total_bytes})")
        self._objects[digest] = data
        self._total_bytes += len(data)
        if self._root is not None:
            path = self._object_path(digest)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        return digest

    def get(self, digest: bytes) -> bytes:
        try:
            return self._objects[digest]
        except KeyError:
            raise NotFound(f"no object {digest.hex()}") from None

    def has(self, digest: bytes) -> bool:
        return digest in self._objects

    def hashes(self) -> Iterator[bytes]:
        """All stored digests in lexicographic order."""
        return iter(sorted(self._objects))

    def __len__(self) -> int:
        return len(self._objects)

    @property
    def total_bytes(self) -> int:
        return self._total_bytes
