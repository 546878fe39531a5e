"""Counter-based random streams keyed by ``(seed, name, index)``.

Every random draw in the package comes from a named stream so that adding a
new consumer never shifts the numbers seen by an existing one.
"""
import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def stream_key(seed, name, index=0):
    return [int(seed) & MASK64, zlib.crc32(name.encode()), int(index)]


def stream(seed, name, index=0):
    """Philox generator for stream ``name`` (sub-stream ``index``) of ``seed``."""
    ss = np.random.SeedSequence(stream_key(seed, name, index))
    return np.random.Generator(np.random.Philox(ss))
