"""Seeded random number generation.

All randomness in the package flows through numpy's PCG64 bit generator,
which is seedable and produces the same stream on every platform.  Runs
are reproduced by fixing one master seed; components derive child seeds
with `spawn_seeds`, which uses `numpy.random.SeedSequence.spawn` so the
derivation itself is documented and stable.
"""

from __future__ import annotations

import numpy as np


def generator(seed: int) -> np.random.Generator:
    """Return the package-wide RNG flavour for a given integer seed."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(master_seed: int, n: int) -> list[int]:
    """Derive ``n`` independent 64-bit child seeds from one master seed.

    Child ``k`` is the first state word of ``SeedSequence(master_seed).spawn(n)[k]``,
    so the mapping (master, k) -> child is fixed for all time.
    """
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]
