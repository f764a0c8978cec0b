import zlib

import numpy as np


def subseed(seed: int, name: str) -> int:
    """Stable named child seed, so each component can be replayed on its own."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def rng_for(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(subseed(seed, name))
