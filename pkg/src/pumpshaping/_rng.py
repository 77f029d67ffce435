"""Counter-based random streams keyed by (seed, stream, block).

Each key addresses an independent Philox stream, so any block of work can
be generated on its own and in any order with bitwise-identical results.
"""

import numpy as np

_MASK64 = 0xFFFF_FFFF_FFFF_FFFF


def generator(seed: int, stream: int, block: int = 0) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    key = np.array([int(seed) & _MASK64, ((int(stream) & 0xFFFF_FFFF) << 32) | (int(block) & 0xFFFF_FFFF)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniform_field(seed: int, stream: int, shape) -> np.ndarray:
    return generator(seed, stream).random(shape)
