"""Deterministic random-number plumbing.

All stochastic pieces of the package (disorder fields, Haar samples, GUE
observables) draw from counter-based Philox streams so that a run is
reproducible from a single master seed regardless of evaluation order or
thread count.  Seeds for sub-streams are derived by hashing, never by
sequential splitting, so realization i can be regenerated in isolation.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

# Recorded in run metadata; bump if the underlying generator ever changes.
RNG_ALGORITHM = "numpy.random.Philox(4x32-10)"
NORMAL_TRANSFORM = "box-muller"


def hash_seed(*parts: int) -> int:
    """Collapse integer parts into a stable 63-bit seed via BLAKE2b.

    Independent of Python's per-process hash randomization and of platform
    word size, so ``hash_seed(master, i)`` names the same stream everywhere.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(int(part).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little") >> 1


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator for the given (already hashed) seed."""
    return np.random.Generator(np.random.Philox(seed))


def normal_box_muller(rng: np.random.Generator, mean: float, std: float,
                      size: int) -> np.ndarray:
    """Gaussian samples via the Box-Muller transform.

    numpy's ``Generator.normal`` uses a ziggurat whose table layout is an
    implementation detail; this explicit transform pins the mapping from
    uniform stream to normal stream so disorder fields are reproducible
    across numpy versions.
    """
    n_pairs = (size + 1) // 2
    # random() yields [0, 1); flip the first uniform to (0, 1] for the log.
    u1 = 1.0 - rng.random(n_pairs)
    u2 = rng.random(n_pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * n_pairs)
    out[0::2] = radius * np.cos(2.0 * math.pi * u2)
    out[1::2] = radius * np.sin(2.0 * math.pi * u2)
    return mean + std * out[:size]
