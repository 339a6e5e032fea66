import hashlib
import random

import pytest

from fogchain.cas import (
    ContentStore,
    HASH_SIZE,
    content_hash,
    hash_from_hex,
    hash_to_hex,
)
from fogchain.errors import NotFound, StorageFull

# SHA-256 of the empty string, the classic frozen vector
EMPTY_SHA256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_digest_is_sha256():
    assert content_hash(b"") == bytes.fromhex(EMPTY_SHA256)
    assert content_hash(b"abc") == hashlib.sha256(b"abc").digest()
    assert len(content_hash(b"anything")) == HASH_SIZE == 32


def test_hex_roundtrip():
    digest = content_hash(b"payload")
    assert hash_from_hex(hash_to_hex(digest)) == digest
    assert len(hash_to_hex(digest)) == 64
    with pytest.raises(ValueError):
        hash_to_hex(b"short")
    with pytest.raises(ValueError):
        hash_from_hex("abcd")


def test_put_get_roundtrip():
    store = ContentStore()
    digest = store.put(b"hello archives")
    assert store.get(digest) == b"hello archives"
    assert store.has(digest)
    assert len(store) == 1


def test_put_is_idempotent():
    store = ContentStore()
    d1 = store.put(b"same bytes")
    d2 = store.put(b"same bytes")
    assert d1 == d2
    assert len(store) == 1
    assert store.total_bytes == len(b"same bytes")


def test_get_missing_raises_not_found():
    store = ContentStore()
    with pytest.raises(NotFound):
        store.get(content_hash(b"never stored"))
    assert not store.has(content_hash(b"never stored"))


def test_hashes_sorted():
    store = ContentStore()
    digests = {store.put(bytes([i]) * 10) for i in range(20)}
    listed = list(store.hashes())
    assert listed == sorted(digests)


def test_directory_persistence(tmp_path):
    root = tmp_path / "objects"
    store = ContentStore(root=root)
    digest = store.put(b"spilled to disk")
    hx = digest.hex()
    assert (root / hx[:2] / hx).read_bytes() == b"spilled to disk"

    reopened = ContentStore(root=root)
    assert reopened.get(digest) == b"spilled to disk"
    assert len(reopened) == 1


def test_capacity_enforced():
    store = ContentStore(capacity_bytes=10)
    store.put(b"12345")
    with pytest.raises(StorageFull):
        store.put(b"6789012")  # 5 + 7 > 10
    # idempotent re-put of existing bytes never counts against capacity
    store.put(b"12345")
    store.put(b"67890")
    assert store.total_bytes == 10


def test_random_roundtrips():
    rng = random.Random(1009)
    store = ContentStore()
    blobs = [rng.randbytes(rng.randrange(0, 512)) for _ in range(300)]
    digests = [store.put(b) for b in blobs]
    for blob, digest in zip(blobs, digests):
        assert digest == hashlib.sha256(blob).digest()
        assert store.get(digest) == blob
