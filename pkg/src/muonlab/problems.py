"""Stochastic objectives whose smoothness and noise constants are known exactly.

Every oracle exposes ``loss``, ``full_gradient`` and ``minibatch_gradient`` plus
the constants the convergence bounds need: ``lipschitz`` (L), ``sigma2``,
``w_star`` and ``f_star``.
"""

import enum
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .exceptions import DimensionError
from .matcore import as_matrix
from .rng import as_generator, random_orthonormal, stream

# Largest second derivative of tanh, 4 / (3 sqrt 3).
TANH_CURVATURE = 4.0 / (3.0 * math.sqrt(3.0))


class ProblemKind(str, enum.Enum):
    NOISY_QUADRATIC = "noisy_quadratic"
    FINITE_SUM_LEAST_SQUARES = "finite_sum_least_squares"
    TWO_LAYER_NET = "two_layer_net"


class ProblemOracle:
    """Common interface. Subclasses set the constants in ``__init__``."""

    kind: ProblemKind
    shape: tuple
    lipschitz: float
    sigma2: float
    w_star: np.ndarray
    f_star: float
    n_samples: Optional[int] = None

    def loss(self, w) -> float:
        raise NotImplementedError

    def full_gradient(self, w) -> np.ndarray:
        raise NotImplementedError

    def minibatch_gradient(self, w, batch, rng) -> np.ndarray:
        raise NotImplementedError

    def sample_gradients(self, w, batch, rng) -> np.ndarray:
        """Stack of ``batch`` per-sample stochastic gradients, shape (batch, m, n)."""
        raise NotImplementedError

    def _check(self, w):
        w = as_matrix(w, name="w")
        if w.shape != self.shape:
            raise DimensionError(f"parameter shape {w.shape} != problem shape {self.shape}")
        return w

    def _check_batch(self, batch):
        if int(batch) != batch or batch < 1:
            raise ValueError(f"batch must be a positive integer, got {batch}")
        if self.n_samples is not None and batch > self.n_samples:
            raise ValueError(f"batch {batch} exceeds the {self.n_samples} available samples")
        return int(batch)


class NoisyQuadratic(ProblemOracle):
    """f(W) = 1/2 ||A (W - W*)||_F^2 with additive Gaussian gradient noise.

    Each per-sample gradient is ``grad f(W) + E`` where E has i.i.d. entries of
    variance sigma2 / (m n), so ``E ||E||_F^2 = sigma2`` exactly.
    """

    kind = ProblemKind.NOISY_QUADRATIC

    def __init__(self, a, w_star, sigma2):
        self.a = as_matrix(a, name="A")
        self.w_star = as_matrix(w_star, name="w_star", tall=True)
        if self.a.shape[1] != self.w_star.shape[0]:
            raise DimensionError(f"A has {self.a.shape[1]} columns, W* has {self.w_star.shape[0]} rows")
        if sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        self.shape = self.w_star.shape
        self.sigma2 = float(sigma2)
        self.hessian = self.a.T @ self.a
        self.lipschitz = float(np.linalg.norm(self.a, 2) ** 2)
        self.f_star = 0.0
        self._entry_std = math.sqrt(self.sigma2 / (self.shape[0] * self.shape[1]))

    @classmethod
    def from_spectrum(cls, m, n, sigma2, spectrum=None, wstar_singular_values=None,
                      rotate=False, seed=0):
        """Build A with the given singular values and a W* with the given ones.

        ``spectrum`` defaults to all ones (A = I, L = 1); ``wstar_singular_values``
        defaults to all ones. Random factors come from ``seed``.
        """
        rng = stream(seed, 0)
        s_a = np.ones(m) if spectrum is None else np.asarray(spectrum, dtype=float)
        if s_a.shape != (m,):
            raise DimensionError(f"spectrum must have length m={m}")
        if rotate:
            a = (random_orthonormal(m, m, rng) * s_a) @ random_orthonormal(m, m, rng).T
        else:
            a = np.diag(s_a)
        s_w = np.ones(n) if wstar_singular_values is None else np.asarray(wstar_singular_values, dtype=float)
        if s_w.shape != (n,):
            raise DimensionError(f"wstar_singular_values must have length n={n}")
        w_star = (random_orthonormal(m, n, rng) * s_w) @ random_orthonormal(n, n, rng).T
        return cls(a, w_star, sigma2)

    def with_sigma2(self, sigma2) -> "NoisyQuadratic":
        """Same objective with a different noise level (``0`` gives exact gradients)."""
        return NoisyQuadratic(self.a, self.w_star, sigma2)

    def loss(self, w) -> float:
        r = self.a @ (self._check(w) - self.w_star)
        return 0.5 * float(np.sum(r * r))

    def full_gradient(self, w) -> np.ndarray:
        return self.hessian @ (self._check(w) - self.w_star)

    def minibatch_gradient(self, w, batch, rng) -> np.ndarray:
        # The mean of b i.i.d. N(0, s^2) noise matrices is one N(0, s^2 / b) draw.
        batch = self._check_batch(batch)
        g = self.full_gradient(w)
        if self.sigma2 == 0.0:
            return g
        rng = as_generator(rng)
        return g + rng.standard_normal(self.shape) * (self._entry_std / math.sqrt(batch))

    def sample_gradients(self, w, batch, rng) -> np.ndarray:
        batch = self._check_batch(batch)
        rng = as_generator(rng)
        g = self.full_gradient(w)
        return g + rng.standard_normal((batch,) + self.shape) * self._entry_std


class _FiniteSum(ProblemOracle):
    """Shared without-replacement sampling for f = (1/N) sum_i f_i."""

    def _indices(self, batch, rng):
        batch = self._check_batch(batch)
        rng = as_generator(rng)
        if batch == self.n_samples:
            return np.arange(self.n_samples)
        return np.sort(rng.choice(self.n_samples, size=batch, replace=False))

    def full_gradient(self, w) -> np.ndarray:
        return self._grad_on(self._check(w), np.arange(self.n_samples))

    def minibatch_gradient(self, w, batch, rng) -> np.ndarray:
        w = self._check(w)
        return self._grad_on(w, self._indices(batch, rng))

    def sample_gradients(self, w, batch, rng) -> np.ndarray:
        w = self._check(w)
        return self._per_sample(w, self._indices(batch, rng))

    def gradient_variance(self, w) -> float:
        """Exact (1/N) sum_i ||grad f_i(W) - grad f(W)||_F^2."""
        g = self._per_sample(self._check(w), np.arange(self.n_samples))
        return float(np.mean(np.sum((g - g.mean(axis=0)) ** 2, axis=(1, 2))))


class FiniteSumLeastSquares(_FiniteSum):
    """f_i(W) = 1/2 ||x_i^T W - y_i^T||^2 over N rows of (X, Y).

    The per-sample variance grows with ||W - W*||, so ``sigma2`` is a certified
    cap over the Frobenius ball of the given ``radius`` around W*.
    """

    kind = ProblemKind.FINITE_SUM_LEAST_SQUARES

    def __init__(self, x, y, radius=0.0):
        self.x = as_matrix(x, name="X")
        self.y = as_matrix(y, name="Y")
        if self.x.shape[0] != self.y.shape[0]:
            raise DimensionError("X and Y need the same number of rows")
        n_samples, m = self.x.shape
        n = self.y.shape[1]
        if m < n:
            raise DimensionError(f"parameter must be tall, got {m}x{n}")
        self.n_samples = n_samples
        self.shape = (m, n)
        gram = self.x.T @ self.x / n_samples
        self.gram = gram
        self.lipschitz = float(np.linalg.eigvalsh(gram)[-1])
        self.w_star = np.linalg.lstsq(self.x, self.y, rcond=None)[0]
        self.f_star = self.loss(self.w_star)
        self.radius = float(radius)
        self.sigma2 = self.variance_cap(self.radius)

    @classmethod
    def generate(cls, m, n, n_samples, noise_std=0.5, radius=0.0, seed=0):
        rng = stream(seed, 0)
        x = rng.standard_normal((n_samples, m))
        w_true = rng.standard_normal((m, n))
        y = x @ w_true + noise_std * rng.standard_normal((n_samples, n))
        return cls(x, y, radius=radius)

    def variance_cap(self, radius) -> float:
        """Upper bound on the per-sample gradient variance for ||W - W*||_F <= radius.

        Per-sample deviations split into a W*-part and a part linear in
        D = W - W*, ``(x_i x_i^T - G) D``; Minkowski's inequality bounds the sum.
        """
        v_star = self.gradient_variance(self.w_star)
        if radius == 0.0:
            return v_star
        outer = np.einsum("ni,nj->nij", self.x, self.x) - self.gram
        second = np.einsum("nij,njk->ik", outer, outer) / self.n_samples
        lam_max = float(np.linalg.eigvalsh(second)[-1])
        return (math.sqrt(v_star) + radius * math.sqrt(max(lam_max, 0.0))) ** 2

    def loss(self, w) -> float:
        r = self.x @ self._check(w) - self.y
        return 0.5 * float(np.sum(r * r)) / self.n_samples

    def _grad_on(self, w, idx):
        xs = self.x[idx]
        return xs.T @ (xs @ w - self.y[idx]) / len(idx)

    def _per_sample(self, w, idx):
        xs = self.x[idx]
        r = xs @ w - self.y[idx]
        return np.einsum("bi,bj->bij", xs, r)


class TwoLayerNet(_FiniteSum):
    """Teacher-student regression through one tanh layer.

    f_i(W) = 1/2 (v^T tanh(W^T x_i) - y_i)^2 with the output weights v frozen
    and y_i produced by the teacher W*. Only W (m x n) is trained. ``lipschitz``
    and ``sigma2`` are global analytic upper bounds, not exact values.
    """

    kind = ProblemKind.TWO_LAYER_NET

    def __init__(self, x, v, w_teacher):
        self.x = as_matrix(x, name="X")
        self.v = np.asarray(v, dtype=float).ravel()
        self.w_star = as_matrix(w_teacher, name="w_teacher", tall=True)
        n_samples, m = self.x.shape
        if self.w_star.shape[0] != m or self.w_star.shape[1] != self.v.size:
            raise DimensionError("teacher must be m x n with n = len(v)")
        self.n_samples = n_samples
        self.shape = self.w_star.shape
        self.y = np.tanh(self.x @ self.w_star) @ self.v
        self.f_star = 0.0
        sq_norms = np.sum(self.x**2, axis=1)
        r_max = 2.0 * float(np.sum(np.abs(self.v)))
        v2 = float(self.v @ self.v)
        self.lipschitz = float(np.mean(sq_norms)) * (v2 + r_max * float(np.max(np.abs(self.v))) * TANH_CURVATURE)
        self.sigma2 = float(np.mean(sq_norms)) * r_max**2 * v2

    @classmethod
    def generate(cls, m, n, n_samples, seed=0):
        rng = stream(seed, 0)
        x = rng.standard_normal((n_samples, m)) / math.sqrt(m)
        v = rng.standard_normal(n) / math.sqrt(n)
        w_teacher = rng.standard_normal((m, n))
        return cls(x, v, w_teacher)

    def _forward(self, w, idx):
        h = np.tanh(self.x[idx] @ w)
        return h, h @ self.v - self.y[idx]

    def loss(self, w) -> float:
        _, r = self._forward(self._check(w), np.arange(self.n_samples))
        return 0.5 * float(np.mean(r * r))

    def _per_sample(self, w, idx):
        h, r = self._forward(w, idx)
        upstream = r[:, None] * self.v[None, :] * (1.0 - h * h)
        return np.einsum("bi,bj->bij", self.x[idx], upstream)

    def _grad_on(self, w, idx):
        h, r = self._forward(w, idx)
        upstream = r[:, None] * self.v[None, :] * (1.0 - h * h)
        return self.x[idx].T @ upstream / len(idx)


# ---------------------------------------------------------------------------
# Config files


@dataclass
class ProblemConfig:
    """Key-value description of a problem; ``build()`` materialises the oracle.

    Keys: kind, m, n, sigma2, spectrum (singular values of A), wstar_singular_values,
    rotate, n_samples (N), noise_std, radius, seed.
    """

    kind: str = ProblemKind.NOISY_QUADRATIC.value
    m: int = 8
    n: int = 4
    sigma2: float = 1.0
    spectrum: Optional[Sequence[float]] = None
    wstar_singular_values: Optional[Sequence[float]] = None
    rotate: bool = False
    n_samples: int = 256
    noise_std: float = 0.5
    radius: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.kind = ProblemKind(self.kind).value
        if self.m < self.n:
            raise DimensionError(f"need m >= n, got m={self.m}, n={self.n}")

    @classmethod
    def from_dict(cls, data) -> "ProblemConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown problem keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("spectrum", "wstar_singular_values"):
            if d[key] is not None:
                d[key] = [float(v) for v in d[key]]
        return d

    def build(self) -> ProblemOracle:
        kind = ProblemKind(self.kind)
        if kind is ProblemKind.NOISY_QUADRATIC:
            return NoisyQuadratic.from_spectrum(
                self.m, self.n, self.sigma2, spectrum=self.spectrum,
                wstar_singular_values=self.wstar_singular_values,
                rotate=self.rotate, seed=self.seed,
            )
        if kind is ProblemKind.FINITE_SUM_LEAST_SQUARES:
            return FiniteSumLeastSquares.generate(
                self.m, self.n, self.n_samples, noise_std=self.noise_std,
                radius=self.radius, seed=self.seed,
            )
        return TwoLayerNet.generate(self.m, self.n, self.n_samples, seed=self.seed)
