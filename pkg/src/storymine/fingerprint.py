"""Stable content fingerprints used to chain pipeline artifacts.

Every stage records the fingerprints of its inputs so that stale
artifact combinations fail fast instead of producing silently
inconsistent output.
"""

import hashlib
import json


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, no whitespace drift."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fingerprint_obj(obj) -> str:
    """sha256 of the canonical JSON encoding of ``obj``."""
    return sha256_hex(canonical_json(obj).encode("utf-8"))
