"""Reproducible random streams keyed by (seed, run, step, ...)."""

import numpy as np


def stream(seed, *keys) -> np.random.Generator:
    """Independent generator for the key path ``(seed, *keys)``.

    Streams for different keys are statistically independent and do not depend
    on the order in which they are created, so grid points can run in any order.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


class StepStreams:
    """Per-step generators for one run: ``streams(t)`` is the stream for step ``t``.

    The Philox key is derived once from ``(seed, *keys)``; step ``t`` owns the
    counter block whose third word is ``t``, so any step can be replayed on its
    own and no two steps overlap (each would need 2**128 draws to collide).
    """

    def __init__(self, seed, *keys):
        entropy = [int(seed)] + [int(k) for k in keys]
        self._key = np.random.SeedSequence(entropy).generate_state(2, np.uint64)

    def __call__(self, t) -> np.random.Generator:
        if t < 0:
            raise ValueError("step index must be non-negative")
        counter = np.array([0, 0, int(t), 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self._key, counter=counter))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(rng)


def random_orthonormal(rows, cols, rng) -> np.ndarray:
    """Matrix with orthonormal columns, Haar-distributed."""
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.sign(np.diag(r))


def spread_spectrum_matrix(rows, cols, rng, floor=0.05, max_ratio=10.0) -> np.ndarray:
    """Random matrix whose Frobenius-normalized singular values are all >= ``floor``.

    Singular values are log-uniform on [1, max_ratio] and redrawn until the
    smallest normalized one clears ``floor``; the singular vectors are Haar.
    """
    if floor * np.sqrt(cols) > 1.0:
        raise ValueError(f"no {cols}-vector of unit norm has all entries >= {floor}")
    while True:
        s = np.exp(rng.uniform(0.0, np.log(max_ratio), cols))
        if s.min() / np.linalg.norm(s) >= floor:
            break
        max_ratio = 1.0 + 0.5 * (max_ratio - 1.0)
    return (random_orthonormal(rows, cols, rng) * s) @ random_orthonormal(cols, cols, rng).T
