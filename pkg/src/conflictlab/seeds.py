"""Stable seed derivation shared by team sampling and the runner.

Built on SHA-256 so derived seeds are identical across processes and
platforms (the builtin ``hash`` is salted per process and unusable for
reproducible experiments).
"""

from __future__ import annotations

import hashlib


def stable_seed(*parts: object) -> int:
    """Collapse a coordinate tuple into a 64-bit seed."""
    blob = "|".join(str(part) for part in parts)
    return int.from_bytes(hashlib.sha256(blob.encode("utf-8")).digest()[:8], "big")


def stable_uniform(*parts: object) -> float:
    """Deterministic uniform draw in [0, 1) keyed by the coordinates."""
    return stable_seed(*parts) / 2.0**64
