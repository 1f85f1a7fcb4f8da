"""Deterministic random stream derivation.

Every random draw in a Monte Carlo run comes from a generator keyed by
``(root seed, scheme, role, trial[, extra...])``. The key is hashed by
``numpy.random.SeedSequence`` (its ``spawn_key`` mixing) into a PCG64
state, so a trial's randomness does not depend on which worker runs it or
in which order trials are evaluated.
"""

from __future__ import annotations

import numpy as np

# scheme ids
COMAC = 0
COMAC_UNBIASED_REF = 1
TDMA = 2
ANALYTIC = 3
VALIDATION = 4

SCHEME_IDS = {"comac": COMAC, "comac_unbiased_ref": COMAC_UNBIASED_REF, "tdma": TDMA}

# role ids
READINGS = 0
SEQUENCES = 1
CHANNEL = 2
NOISE = 3
BITS = 4


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the given root seed and integer key path."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def trial_streams(seed: int, scheme: int, trial: int, *extra: int) -> dict[int, np.random.Generator]:
    """One generator per role for a single trial."""
    return {role: stream(seed, scheme, role, trial, *extra)
            for role in (READINGS, SEQUENCES, CHANNEL, NOISE, BITS)}
