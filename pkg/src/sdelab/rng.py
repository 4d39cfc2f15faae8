"""Counter-based noise streams.

Every random draw in the library is produced by a Philox bit generator keyed
by ``(seed, context)`` with the step index placed in the top word of the
256-bit counter.  A draw is therefore a pure function of
``(seed, context, step)`` and the requested shape: results do not depend on
execution order, worker count, or how many draws other components made.

Within an ensemble block the particle index is the row of the drawn array,
so per-particle streams never have to be instantiated individually.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Context ids, one per independent noise role.
CTX_PRIOR = 1        # prior draws at the grid top
CTX_STEP = 2         # fresh noise inside reverse-time sampler steps
CTX_FORWARD = 3      # forward (noise-adding) chains
CTX_EDIT = 4         # patch-perturbation noise in latent editing
CTX_PIN = 5          # forward perturbation used for mask pinning
CTX_DATA = 6         # draws from analytic data distributions


def _splitmix64(z: int) -> int:
    """One round of the splitmix64 mixing function."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Fold indices into a seed, giving independent child seeds.

    Used to hand each repetition / particle batch / experiment leg its own
    64-bit seed deterministically.
    """
    z = _splitmix64(seed & _MASK64)
    for ix in indices:
        z = _splitmix64(z ^ (ix & _MASK64))
    return z


class NoiseStream:
    """A deterministic family of Gaussian blocks indexed by step.

    Parameters
    ----------
    seed : int
        Master seed (64-bit).
    context : int
        Role identifier; streams with different contexts are independent.
    """

    def __init__(self, seed: int, context: int = 0) -> None:
        self.seed = seed & _MASK64
        self.context = context & _MASK64

    def generator(self, step: int) -> np.random.Generator:
        """A fresh generator positioned at ``(seed, context, step)``."""
        key = np.array([self.seed, self.context], dtype=np.uint64)
        counter = np.array([0, 0, 0, step & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(counter=counter, key=key))

    def normal(self, step: int, shape) -> np.ndarray:
        """Standard-normal block for the given step index."""
        return self.generator(step).standard_normal(shape)

    def child(self, index: int, context: int | None = None) -> "NoiseStream":
        """An independent stream derived from this one."""
        return NoiseStream(derive_seed(self.seed, self.context, index),
                           self.context if context is None else context)
