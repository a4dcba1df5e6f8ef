"""Deterministic per-stage seed derivation.

All randomness in an experiment flows from one master seed; each stage
mixes its name into that seed through SHA-256 so stages stay independent
and reruns reproduce exactly.
"""

import hashlib


def derive_seed(master: int, stage: str) -> int:
    digest = hashlib.sha256(f"{master}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)
