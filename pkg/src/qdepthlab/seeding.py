"""Hierarchical, reproducible seed derivation.

One master seed governs a whole experiment tree.  Every trial, role, or
repetition derives its own child seed as H(master || part || part ...), so any
single trial can be replayed in isolation without rerunning the tree.
"""

from __future__ import annotations

import hashlib

HASH_NAME = "sha256"  # recorded in every experiment report


def _encode_part(part) -> bytes:
    if isinstance(part, bytes):
        return b"B" + len(part).to_bytes(4, "big") + part
    if isinstance(part, str):
        raw = part.encode("utf-8")
        return b"S" + len(raw).to_bytes(4, "big") + raw
    if isinstance(part, int):
        if part < 0:
            raise ValueError("seed parts must be non-negative integers")
        raw = part.to_bytes(max(1, (part.bit_length() + 7) // 8), "big")
        return b"I" + len(raw).to_bytes(4, "big") + raw
    raise TypeError(f"unsupported seed part type: {type(part)!r}")


def derive_seed(master: int, *parts) -> int:
    """Derive a 128-bit child seed from a master seed and a path of parts."""
    h = hashlib.sha256()
    h.update(_encode_part(master))
    for part in parts:
        h.update(_encode_part(part))
    return int.from_bytes(h.digest()[:16], "big")


def seed_to_hex(seed: int) -> str:
    return f"{seed:032x}"


def seed_from_hex(text: str) -> int:
    return int(text, 16)
