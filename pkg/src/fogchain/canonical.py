"""Canonical JSON encoding.

Any structure that gets hashed or gas-metered must serialize to exactly
one byte string, so every component funnels through this module: keys
sorted, no whitespace, UTF-8, and non-finite floats rejected outright.
"""

import json
from typing import Any


def canonical_json(obj: Any) -> bytes:
    """Encode obj as canonical JSON bytes.

    Raises ValueError for NaN or infinite floats; those have no JSON
    representation and would silently break hash stability.
    """
    return json.dumps(
        obj,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    ).encode("utf-8")


def canonical_str(obj: Any) -> str:
    return canonical_json(obj).decode("utf-8")
