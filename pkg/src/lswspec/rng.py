"""Seeded, addressable Gaussian streams.

Every stream is a Philox (counter-based) generator keyed by
``(seed, purpose, scale)``, so a draw depends only on its key and its
position, never on which other streams were consumed first.
"""
import numpy as np

# stream purposes
INNOVATIONS = 1
REGULARIZATION = 2


def stream(seed, purpose, j):
    """Generator for the ``(seed, purpose, scale)`` stream."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), -int(j)))
    return np.random.Generator(np.random.Philox(ss))


def normals(seed, purpose, j, n):
    """First ``n`` standard normal draws of a stream.

    Prefix-stable: ``normals(..., n)[:m] == normals(..., m)``.
    """
    return stream(seed, purpose, j).standard_normal(int(n))
