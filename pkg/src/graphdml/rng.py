"""Named random substreams derived from a single global seed.

Every source of randomness in the pipeline (filtering, weight init, batch
shuffling, column masking, edge splitting, k-means) pulls its generator from
here so that one integer seed fixes the whole run.
"""

import zlib

import numpy as np

__all__ = ["substream", "generator"]


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, *names) -> np.random.SeedSequence:
    """Derive a child SeedSequence for a named stream.

    ``names`` may mix strings and integers (e.g. ``("mask", view, step)``),
    giving a stable key independent of call order.
    """
    key = tuple(_name_key(n) if isinstance(n, str) else int(n) for n in names)
    return np.random.SeedSequence(entropy=int(seed), spawn_key=key)


def generator(seed: int, *names) -> np.random.Generator:
    """A PCG64 generator on the named substream."""
    return np.random.default_rng(substream(seed, *names))
