"""Merged device history: anchored archives plus the live store.

A history query [from, to) is answered window by window. Any part of the
range covered by an anchored archive is served from the content store,
verified by the on-ledger digest list; whatever remains (the open
window, plus anything closed but not yet anchored) comes from the
aggregator's time-series store. Each region is reported in `sources`, so
a caller can see exactly which bytes were ledger-anchored.

No instant is ever served twice: archive coverage is subtracted from the
range before the live store is consulted.
"""

import json

from .cas import hash_from_hex
from .errors import MissingArchive


def _load_doc(system, hex_digest: str, device_id: str, index: int) -> dict:
    from .errors import NotFound
    try:
        raw = system.cas.get(hash_from_hex(hex_digest))
    except NotFound:
        raise MissingArchive(
            f"window {index} of {device_id} anchors {hex_digest} "
            f"but the content store has no such object") from None
    return json.loads(raw.decode("utf-8"))


def merge_history(system, device_id: str, frm: int, to: int) -> dict:
    window_ms = system.config.window_ms
    record = system.host.devices[device_id]

    samples: list[dict] = []
    events: list[dict] = []
    sources: list[dict] = []
    covered: list[tuple[int, int]] = []

    for archive in record.archives:
        ws = archive.window_index * window_ms
        we = ws + window_ms
        lo, hi = max(frm, ws), min(to, we)
        if lo >= hi:
            continue
        doc = _load_doc(system, archive.data_hash, device_id,
                        archive.window_index)
        for row in doc.get("samples", []):
            if lo <= row["timestamp"] < hi:
                samples.append({"device_id": device_id, **row})
        if archive.events_hash is not None:
            events_doc = _load_doc(system, archive.events_hash, device_id,
                                   archive.window_index)
        else:
            events_doc = doc
        for row in events_doc.get("events", []):
            if lo <= row["timestamp"] < hi:
                events.append({"device_id": device_id, **row})
        source = {
            "origin": "archive",
            "window_index": archive.window_index,
            "from": lo,
            "to": hi,
            "data_hash": archive.data_hash,
        }
        if archive.events_hash is not None:
            source["events_hash"] = archive.events_hash
        sources.append(source)
        covered.append((lo, hi))

    # the live store answers for whatever the archives did not cover
    covered.sort()
    gaps: list[tuple[int, int]] = []
    cursor = frm
    for lo, hi in covered:
        if lo > cursor:
            gaps.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < to:
        gaps.append((cursor, to))

    for lo, hi in gaps:
        for agg in system.aggregators:
            for s in agg.tsdb.query_range(device_id, lo, hi):
                samples.append({
                    "device_id": s.device_id,
                    "attribute": s.attribute,
                    "timestamp": s.timestamp,
                    "value": s.value,
                })
            for e in agg.tsdb.query_events_range(device_id, lo, hi):
                events.append({
                    "device_id": e.device_id,
                    "attribute": e.attribute,
                    "policy_id": e.policy_id,
                    "criticality": e.criticality,
                    "threshold_type": e.threshold_type,
                    "threshold_value": e.threshold_value,
                    "violation_count": e.violation_count,
                    "value": e.value,
                    "timestamp": e.timestamp,
                })
        sources.append({"origin": "tsdb", "from": lo, "to": hi})

    samples.sort(key=lambda r: (r["timestamp"], r["attribute"]))
    events.sort(key=lambda r: (r["timestamp"], r["policy_id"]))
    sources.sort(key=lambda r: (r["from"], r["origin"]))
    return {
        "device_id": device_id,
        "from": frm,
        "to": to,
        "samples": samples,
        "events": events,
        "sources": sources,
    }
