"""Deterministic RNG stream derivation.

All stochastic operations in this package take an explicit numpy Generator.
Simulation harnesses derive one independent stream per unit of work by hashing
(master seed, index...) through numpy's SeedSequence, so results do not depend
on scheduling order or on how many other units run in the same process.
"""

from __future__ import annotations

import numpy as np


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *key).

    Growing a run (e.g. adding trials) never reshuffles earlier streams because
    each stream depends only on its own key, not on the total count.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), *map(int, key))))
