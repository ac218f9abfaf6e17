"""
Centralized helper functions for packing_accel core logic.
Handles seeded random streams, seed mixing for clones and trials, and timing.
"""

import time
from contextlib import contextmanager

import numpy as np

MASK64 = (1 << 64) - 1

# ============================================================================
# RANDOM STREAMS
# ============================================================================
# Every random draw in the package comes from a Philox (counter-based) bit
# generator so that a seed reproduces the same stream on every platform.


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & MASK64))


def splitmix64(value: int) -> int:
    """One step of the SplitMix64 finalizer; a bijection on 64-bit integers."""
    z = (int(value) + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def clone_seed(master: int, clone_id: int) -> int:
    """seed_i = master XOR splitmix64(i)."""
    return (int(master) ^ splitmix64(clone_id)) & MASK64


def derive_seed(master: int, *labels: int) -> int:
    """Folds integer labels (trial index, cell index, ...) into a master seed."""
    seed = int(master) & MASK64
    for label in labels:
        seed = splitmix64(seed ^ splitmix64(label))
    return seed


# ============================================================================
# TIMING
# ============================================================================

class Stopwatch:
    """Accumulates monotonic wall time over several `with sw.measure():` blocks."""

    def __init__(self):
        self.elapsed = 0.0

    @contextmanager
    def measure(self):
        start = time.perf_counter()
        try:
            yield self
        finally:
            self.elapsed += time.perf_counter() - start


def now() -> float:
    return time.perf_counter()
