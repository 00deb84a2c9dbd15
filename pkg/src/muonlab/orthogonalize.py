"""Search-direction computation: exact polar factor and Newton-Schulz quintic."""

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import NumericError
from .matcore import DEFAULT_RANK_TOL, as_matrix

NS5_COEFFS = (3.4445, -4.7750, 2.0315)
NS5_STEPS = 5


class OrthKind(str, enum.Enum):
    EXACT_SVD = "exact_svd"
    NEWTON_SCHULZ5 = "newton_schulz5"


@dataclass(frozen=True)
class OrthMethod:
    kind: OrthKind = OrthKind.EXACT_SVD
    ns_coeffs: tuple = NS5_COEFFS
    ns_steps: int = NS5_STEPS
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        object.__setattr__(self, "kind", OrthKind(self.kind))
        if int(self.ns_steps) != self.ns_steps or self.ns_steps < 1:
            raise ValueError(f"ns_steps must be a positive integer, got {self.ns_steps}")
        if len(self.ns_coeffs) != 3:
            raise ValueError("ns_coeffs must be a triple (a, b, c)")
        object.__setattr__(self, "ns_coeffs", tuple(float(x) for x in self.ns_coeffs))

    @classmethod
    def exact(cls, rank_tol=DEFAULT_RANK_TOL):
        return cls(kind=OrthKind.EXACT_SVD, rank_tol=rank_tol)

    @classmethod
    def newton_schulz(cls, steps=NS5_STEPS, coeffs=NS5_COEFFS):
        return cls(kind=OrthKind.NEWTON_SCHULZ5, ns_coeffs=coeffs, ns_steps=steps)


class Orthogonalized(NamedTuple):
    """Search direction plus telemetry about how it was produced."""

    direction: np.ndarray
    degenerate: bool
    path: OrthKind
    rank: int


def quintic(x, coeffs=NS5_COEFFS):
    """The scalar map a*x + b*x**3 + c*x**5 that NS5 applies to each singular value."""
    a, b, c = coeffs
    return a * x + b * x**3 + c * x**5


def quintic_iterate(x, steps=NS5_STEPS, coeffs=NS5_COEFFS):
    for _ in range(steps):
        x = quintic(x, coeffs)
    return x


def _exact(c, rank_tol):
    if not np.any(c):
        return np.zeros_like(c), 0
    u, s, vt = np.linalg.svd(c, full_matrices=False)
    r = int(np.count_nonzero(s > rank_tol * s[0]))
    return u[:, :r] @ vt[:r], r


def orthogonalize_exact(c, rank_tol=DEFAULT_RANK_TOL) -> np.ndarray:
    """Polar factor U V^T of ``c`` from its rank-truncated SVD.

    For rank-deficient ``c`` only the leading ``r`` singular pairs contribute, so
    ``||O||_F**2 == r``. The zero matrix maps to the zero matrix.
    """
    c = as_matrix(c, name="c", tall=True)
    return _exact(c, rank_tol)[0]


def newton_schulz5(c, method: OrthMethod = None) -> np.ndarray:
    """Approximate polar factor by the quintic Newton-Schulz iteration.

    Starts from ``c / ||c||_F`` and applies ``X <- aX + b(XX^T)X + c(XX^T)^2 X``
    ``method.ns_steps`` times. The update is evaluated through the n x n Gram
    matrix ``X^T X``, which gives the same polynomial in X.
    """
    method = method or OrthMethod.newton_schulz()
    return _newton_schulz(as_matrix(c, name="c", tall=True), method)


def _newton_schulz(c, method):
    norm = np.linalg.norm(c, "fro")
    if norm == 0.0:
        return np.zeros_like(c)
    a, b, cc = method.ns_coeffs
    x = c / norm
    eye = np.eye(c.shape[1])
    for _ in range(method.ns_steps):
        gram = x.T @ x
        x = x @ (a * eye + b * gram + cc * (gram @ gram))
        if not np.all(np.isfinite(x)):
            raise NumericError("Newton-Schulz iterate became non-finite")
    return x


def orthogonalize(c, method: OrthMethod = None) -> Orthogonalized:
    """Dispatch to the exact or Newton-Schulz path and report what ran."""
    method = method or OrthMethod()
    c = as_matrix(c, name="c", tall=True)
    return _dispatch(c, method)


def _dispatch(c, method):
    if method.kind is OrthKind.EXACT_SVD:
        direction, rank = _exact(c, method.rank_tol)
    else:
        direction = _newton_schulz(c, method)
        rank = 0 if not np.any(c) else min(c.shape)
    return Orthogonalized(direction, rank == 0, method.kind, rank)


# Acceptance band for NS5 output singular values and the distance tolerance
# (times sqrt(n)) to the exact polar factor. The quintic's fixed-point band is
# roughly [0.68, 1.13], so these leave room for five-step transients.
NS_BAND = (0.3, 1.7)
NS_BAND_TOL = 0.35


class NsReport(NamedTuple):
    distance: float
    tolerance: float
    sv_min: float
    sv_max: float

    @property
    def ok(self) -> bool:
        lo, hi = NS_BAND
        return self.distance <= self.tolerance and lo <= self.sv_min and self.sv_max <= hi


def ns_vs_exact(c, method: OrthMethod = None) -> NsReport:
    """Compare the NS5 direction with the exact polar factor of ``c``."""
    c = as_matrix(c, name="c", tall=True)
    method = method or OrthMethod.newton_schulz()
    ns = _newton_schulz(c, method)
    exact, _ = _exact(c, DEFAULT_RANK_TOL)
    s = np.linalg.svd(ns, compute_uv=False)
    return NsReport(
        distance=float(np.linalg.norm(ns - exact)),
        tolerance=NS_BAND_TOL * float(np.sqrt(c.shape[1])),
        sv_min=float(s.min()),
        sv_max=float(s.max()),
    )
