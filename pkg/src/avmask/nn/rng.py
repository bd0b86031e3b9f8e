"""Seeded random streams.

All randomness comes from numpy's Philox4x64 counter-based generator,
keyed through ``SeedSequence`` so that a ``(seed, *stream)`` tuple names an
independent, platform-stable stream.
"""

import numpy as np


def make_rng(seed, *stream):
    """Return a Generator for ``seed`` and an optional tuple of stream ids."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(s) & 0xFFFFFFFFFFFFFFFF for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
