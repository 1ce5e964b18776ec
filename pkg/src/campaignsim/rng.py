"""Deterministic random-number plumbing.

Replications are grouped into fixed-size tiles; each tile gets its own
counter-based Philox stream keyed by (master seed, tile index).  Because the
tile size is a constant of the algorithm, the thresholds drawn for replication
r depend only on (master seed, r) and never on batch sizes or worker counts.

Purchase tie-breaks use a stateless splitmix64 hash keyed by
(master seed, replication, node, step) so the outcome is independent of the
order in which nodes are examined.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# Replications per threshold tile.  Part of the deterministic contract: changing
# this value changes which uniforms a given replication sees.
TILE_SIZE = 4096


def splitmix64(x: int) -> int:
    """One round of the splitmix64 mixer (Steele et al.)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return (x ^ (x >> 31)) & MASK64


def mix_key(*parts: int) -> int:
    """Fold integer parts into a single well-mixed 64-bit key."""
    acc = 0x243F6A8885A308D3
    for p in parts:
        acc = splitmix64((acc ^ (int(p) & MASK64)) & MASK64)
    return acc


def key_uniform(*parts: int) -> float:
    """Deterministic uniform in [0, 1) derived from the given key parts."""
    return mix_key(*parts) / 2.0**64


def tile_rng(master_seed: int, tile_index: int) -> np.random.Generator:
    """Counter-based generator for one replication tile."""
    ss = np.random.SeedSequence(entropy=(int(master_seed) & MASK64, int(tile_index)))
    return np.random.Generator(np.random.Philox(seed=ss))


def derive_seed(*parts: int) -> int:
    """A 63-bit sub-seed for nested components (optimizer inner runs etc.)."""
    return mix_key(*parts) >> 1
