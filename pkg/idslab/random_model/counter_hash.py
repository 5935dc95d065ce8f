"""Counter-based hashing of (seed, cell index) to uniform variates.

Every draw is a pure function of the key and the integer cell coordinates, so a
cell's amplitude does not depend on which window it was sampled in. All mixing
happens in ``uint64`` arithmetic; the only float operation is the final scaling
by 2^-53, which is exact.
"""

import hashlib
from typing import Optional

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)

METRIC_LABEL = "metric"
POTENTIAL_LABEL = "potential"


def splitmix64(state: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a ``uint64`` array."""
    with np.errstate(over="ignore"):
        z = state + GOLDEN_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX_1
        z = (z ^ (z >> np.uint64(27))) * _MIX_2
        return z ^ (z >> np.uint64(31))


def derive_key(seed: int, label: str) -> np.uint64:
    """Stream key for ``label`` under ``seed``; distinct labels give independent streams."""
    tag = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")
    state = np.array([(seed & MASK64) ^ tag], dtype=np.uint64)
    return splitmix64(state)[0]


def hash_uniform(key: np.uint64, cells: np.ndarray, period: Optional[int] = None) -> np.ndarray:
    """Uniform variates in [0, 1), one per row of the integer array ``cells``.

    With ``period`` the cell coordinates are reduced modulo the period first, which
    yields the periodic realization used on tori.
    """
    cells = np.asarray(cells, dtype=np.int64)
    if cells.ndim != 2:
        raise ValueError("cells must be a 2-d array of integer coordinates")
    if period is not None:
        cells = np.mod(cells, period)
    state = np.full(cells.shape[0], key, dtype=np.uint64)
    for axis in range(cells.shape[1]):
        state = splitmix64(state ^ cells[:, axis].view(np.uint64))
    return (state >> np.uint64(11)).astype(np.float64) * (2.0**-53)
