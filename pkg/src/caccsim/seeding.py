"""Deterministic seed fan-out.

A single master seed expands into per-purpose child seeds by hashing the
master together with a slash-joined label path, e.g.
``derive_seed(1234, "scenario", "highway-clear-day")``. Re-running any
individual component with the same master seed and labels reproduces its
RNG stream exactly, independent of what else ran.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *labels) -> int:
    key = f"{master}/" + "/".join(str(part) for part in labels)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)
