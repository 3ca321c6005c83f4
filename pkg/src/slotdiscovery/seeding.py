"""Deterministic seed derivation.

Every stochastic choice in a run (splits, warm-up draws, batch shuffles,
dropout masks, head initialisation) derives its seed functionally from the
run seed plus a context path, so checkpoint/resume replays the exact same
trajectory without serialising RNG streams.
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Map an arbitrary context path to a stable 63-bit seed.

    Parts are joined textually, so ``derive_seed(7, "epoch", 3)`` is stable
    across processes and platforms (unlike ``hash()``).
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1
