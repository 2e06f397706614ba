"""Counter-based random substreams.

A replicate's stream is a pure function of ``(master_seed, *key)``, so
results do not depend on how replicates are scheduled or how many there are.
"""

import struct

import numpy as np

__all__ = ["as_generator", "cell_key", "substream"]

_MASK64 = (1 << 64) - 1


def _word(v) -> int:
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v) & _MASK64
    if isinstance(v, (float, np.floating)):
        return struct.unpack("<Q", struct.pack("<d", float(v)))[0]
    if isinstance(v, str):
        # stable across processes, unlike hash()
        return int.from_bytes(v.encode()[:8].ljust(8, b"\0"), "little") ^ len(v)
    raise TypeError(f"unsupported key component {v!r}")


def cell_key(*parts) -> tuple:
    """Map mixed int/float/str parts to a tuple of 64-bit words."""
    return tuple(_word(p) for p in parts)


def substream(master_seed: int, *key) -> np.random.Generator:
    """Independent PCG64 stream keyed by ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=cell_key(*key))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed. Ambient entropy is refused."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng))
    raise TypeError("rng must be a numpy Generator or an integer seed")
