"""Deterministic random streams.

All randomness flows through explicitly seeded Philox (counter-based) bit
generators; there is no global RNG state anywhere in the package. Gaussian
deviates come from the Box-Muller transform applied to Philox uniforms, so
a seed reproduces bit-identical values on any platform with IEEE-754
doubles.

Streams are addressed by (seed, *ids). The ids select independent
sub-streams of one seed: the first id is a domain tag (constants below),
the rest index items within the domain. Parallel consumers must each own
their own (seed, *ids) stream; a stream object itself is stateful and must
not be shared.
"""

from __future__ import annotations

import struct

import numpy as np

from .fnv import MASK64, fnv1a64

# Domain tags. Keeping these distinct guarantees that e.g. the clean-image
# generator and the noise sampler never consume the same counter sequence
# even when handed the same user-facing seed.
DOMAIN_CLEAN = 1
DOMAIN_NOISE = 2
DOMAIN_BATCH = 3
DOMAIN_INIT = 4
DOMAIN_EVAL_NOISE = 5


def stream(seed: int, *ids: int) -> np.random.Generator:
    """Return the Philox generator for the (seed, *ids) stream.

    The 128-bit Philox key is (seed, fnv1a64(packed ids)), so streams with
    the same seed but different id tuples run on disjoint counter sequences.
    """
    packed = b"".join(struct.pack("<q", int(i)) for i in ids)
    key = np.array([seed & MASK64, fnv1a64(packed)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def normal(rng: np.random.Generator, shape, sigma: float = 1.0) -> np.ndarray:
    """Gaussian deviates via Box-Muller on the stream's uniforms."""
    shape = tuple(np.atleast_1d(shape)) if not isinstance(shape, tuple) else shape
    n = 1
    for s in shape:
        n *= int(s)
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1], keeps log finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])[:n]
    if sigma != 1.0:
        z = sigma * z
    return z.reshape(shape)


def train_seed(seed: int) -> int:
    """Map a run seed into the training seed domain (low bit cleared)."""
    return (seed & MASK64) & ~1


def eval_seed(seed: int) -> int:
    """Map a run seed into the evaluation seed domain (low bit set)."""
    return (seed & MASK64) | 1
