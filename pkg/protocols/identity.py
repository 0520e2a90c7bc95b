"""Content-addressed run identities and derived seeds."""
import hashlib
import json
from typing import Any


def canonical_json(payload: Any) -> str:
    """Platform-independent serialization used before hashing."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def run_identity(payload: Any, length: int = 16) -> str:
    """Hex digest identifying a run by its configuration."""
    return hashlib.sha256(canonical_json(payload).encode("ascii")).hexdigest()[:length]


def run_seed(*parts: Any) -> int:
    """
    Derive a 32-bit seed from arbitrary JSON-serializable parts.

    Seeds depend only on the configuration they describe, never on grid
    order or on which worker executes the run.
    """
    digest = hashlib.sha256(canonical_json(list(parts)).encode("ascii")).digest()
    return int.from_bytes(digest[:4], "big")
