"""Deterministic seed derivation for Monte Carlo work.

Every stochastic routine takes an integer seed and derives child streams
with :func:`child_rng`, keyed by purpose strings and indices.  Replication
blocks get their own child stream, so results are bit-identical no matter
how blocks are scheduled across threads.
"""

import hashlib

import numpy as np


def _key_to_ints(key):
    """Map a mixed (str/int) key tuple to a flat tuple of uint32 words."""
    words = []
    for part in key:
        if isinstance(part, str):
            digest = hashlib.sha256(part.encode("utf-8")).digest()
            words.extend(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
        elif isinstance(part, (int, np.integer)):
            words.append(int(part) & 0xFFFFFFFF)
            words.append((int(part) >> 32) & 0xFFFFFFFF)
        else:
            raise TypeError(f"seed key parts must be str or int, got {type(part)!r}")
    return tuple(words)


def child_seed_sequence(seed, *key):
    """SeedSequence for stream `key` under master `seed`; stable across runs."""
    return np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=_key_to_ints(key))


def child_rng(seed, *key):
    """A fresh Generator for the stream identified by (seed, *key)."""
    return np.random.Generator(np.random.PCG64(child_seed_sequence(seed, *key)))
