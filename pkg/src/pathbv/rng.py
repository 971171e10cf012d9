"""Counter-based random streams keyed by (seed, stream, block).

Every Monte Carlo estimator splits its replicas into fixed-size blocks and
draws block ``j`` from ``stream(seed, tag, j)``. Results therefore depend only
on the seed and the block size, never on how blocks are scheduled.
"""

import numpy as np

BLOCK_SIZE = 2048


def stream(seed, *key):
    """Philox generator for the given seed and integer key path."""
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    spawn_key = tuple(int(k) for k in key)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


def replica_rng(seed, replica):
    """Generator for a single replica; identical (seed, replica) give identical draws."""
    return stream(seed, 0xA11CE, replica)


def blocks(n, block_size=BLOCK_SIZE):
    """Yield (block_index, start, stop) covering range(n)."""
    for j, start in enumerate(range(0, n, block_size)):
        yield j, start, min(start + block_size, n)
