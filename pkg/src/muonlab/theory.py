"""Closed-form norm bounds, convergence bounds and critical-batch formulas.

All functions are pure. ``BoundConstants.delta`` is the unsquared norm
||M_0 - grad f(W_0)||_F; the convergence bounds use it as ``delta**2 + 2 sqrt(2n) delta``.
"""

import math
from dataclasses import dataclass, field
from typing import Dict

from .exceptions import InfeasibleBatchError, StabilityConditionError
from .optimizer import Variant

# Relative slack allowed when comparing a float trajectory against an exact bound.
BOUND_RTOL = 1e-12


@dataclass(frozen=True)
class BoundConstants:
    L: float
    sigma2: float
    n: int
    eta: float
    beta: float
    lam: float = 0.0
    f_w0: float = 0.0
    w0_norm: float = 0.0
    wstar_norm: float = 0.0
    delta: float = 0.0
    f_lower_bound: float = 0.0

    @property
    def beta_bar(self) -> float:
        return (2.0 * self.beta + 1.0) * (1.0 - self.beta) / 2.0

    @property
    def nu(self) -> float:
        return math.sqrt(2.0 * (1.0 - self.beta) * self.n)

    @property
    def gamma(self) -> float:
        return self.L * self.eta / (1.0 - self.beta)

    @property
    def rho(self) -> float:
        return (1.0 + 2.0 * (1.0 + self.L * self.eta) * self.lam) / 2.0

    @property
    def d0(self) -> float:
        self._require_lambda()
        return self.L * (self.w0_norm + math.sqrt(self.n) / self.lam + self.wstar_norm)

    @property
    def delta_sq(self) -> float:
        return self.delta**2

    def _require_lambda(self):
        if not self.lam > 0:
            raise StabilityConditionError("weight-decay bounds need lambda > 0")

    def require_stability(self):
        self._require_lambda()
        if self.eta * self.lam > 1.0 + BOUND_RTOL:
            raise StabilityConditionError(
                f"eta={self.eta} exceeds 1/lambda={1.0 / self.lam}"
            )

    def at_threshold(self) -> bool:
        return abs(self.eta * self.lam - 1.0) <= BOUND_RTOL


def _form_scale(c, form):
    if form not in ("proof", "display"):
        raise ValueError(f"unknown form {form!r}")
    return math.sqrt(c.n) if form == "proof" else 1.0


def param_norm_bound(c: BoundConstants, t: int) -> float:
    """Bound on ||W_t||_F for Muon with weight decay and eta <= 1/lambda."""
    c.require_stability()
    floor = math.sqrt(c.n) / c.lam
    if c.at_threshold():
        # (1 - eta lambda)^t is exactly 0 for t >= 1 and 1 at t = 0
        return floor if t >= 1 else c.w0_norm + floor
    return (1.0 - c.eta * c.lam) ** t * c.w0_norm + floor


def grad_norm_bound(c: BoundConstants, t: int, form="proof") -> float:
    """Bound on ||grad f(W_t)||_F under the same conditions.

    ``form="proof"`` keeps the sqrt(n) factor that the derivation produces;
    ``form="display"`` drops it, as in the headline statement. The two agree at n=1.
    """
    scale = _form_scale(c, form)
    c.require_stability()
    tail = c.L * scale / c.lam + c.L * c.wstar_norm
    if c.at_threshold():
        return tail if t >= 1 else c.L * c.w0_norm + tail
    return c.L * (1.0 - c.eta * c.lam) ** t * c.w0_norm + tail


def avg_grad_norm_bound(c: BoundConstants, T: int, form="proof") -> float:
    """Almost-sure bound on (1/T) sum_t ||grad f(W_t)||_F with weight decay.

    At eta = 1/lambda the T-independent form bounds the average over t >= 1:
    W_1 no longer depends on W_0, but W_0 itself is unconstrained.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    scale = _form_scale(c, form)
    c.require_stability()
    tail = c.L * scale / c.lam + c.L * c.wstar_norm
    if c.at_threshold():
        return tail
    return c.L * c.w0_norm / (c.eta * c.lam * T) + tail


def momentum_tracking_bound(c: BoundConstants, t: int, b: int) -> float:
    """Per-step bound on E||M_t - grad f(W_t)||_F^2."""
    if b < 1:
        raise ValueError("batch must be >= 1")
    transient = ((1.0 + c.beta) / 2.0) ** t * c.delta_sq
    drift = 4.0 * c.L**2 * c.eta**2 * c.n / (1.0 - c.beta) ** 2
    noise = 2.0 * (1.0 - c.beta) * c.sigma2 / b
    return transient + drift + noise


@dataclass(frozen=True)
class BoundBreakdown:
    """Right-hand side of a convergence theorem, split into named terms.

    The bound equals ``X/T + Y/b + sublinear/sqrt(b) + Z`` where ``sublinear``
    collects the coefficients of the sqrt(sigma2/b) terms (times sqrt(sigma2)).
    """

    variant: Variant
    T: int
    b: int
    terms: Dict[str, float]
    X: float
    Y: float
    sublinear: float
    Z: float
    x_terms: Dict[str, float] = field(default_factory=dict)
    z_terms: Dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return math.fsum(self.terms.values())

    def recomposed(self) -> float:
        return self.X / self.T + self.Y / self.b + self.sublinear / math.sqrt(self.b) + self.Z

    def rows(self):
        """(term, value) pairs for CSV output, ending with the X/Y/Z ledger."""
        out = list(self.terms.items())
        out += [("total", self.total), ("X", self.X), ("Y", self.Y),
                ("sublinear", self.sublinear), ("Z", self.Z)]
        return out


def theorem_bound(c: BoundConstants, variant, T: int, b: int) -> BoundBreakdown:
    """Full convergence bound on (1/T) sum_t E||grad f(W_t)||_F for one variant."""
    variant = Variant(variant)
    if T < 1 or b < 1:
        raise ValueError("T and b must be >= 1")
    n, beta = c.n, c.beta
    momentum_scale = beta if variant.nesterov else 1.0
    noise_coef = c.beta_bar if variant.nesterov else 1.0 - beta
    init_err = c.delta_sq + 2.0 * math.sqrt(2.0 * n) * c.delta
    gamma = c.gamma

    x_terms = {}
    z_terms = {}
    f0 = c.f_w0 - c.f_lower_bound
    if variant.weight_decay:
        c.require_stability()
        x_terms["objective_gap"] = (f0 + c.rho * c.w0_norm**2) / c.eta
        noise_coef += c.lam / 2.0
    else:
        x_terms["objective_gap"] = f0 / c.eta
    x_terms["momentum_init"] = momentum_scale * init_err / (1.0 - beta)

    z_terms["momentum_drift"] = 2.0 * gamma * momentum_scale * n * (1.0 + gamma)
    if variant.weight_decay:
        z_terms["step_size"] = (1.0 + c.L * c.eta) * n
        z_terms["decay_norm"] = c.rho * n / c.lam
        z_terms["decay_gradient"] = c.lam * c.d0**2 / 2.0
    else:
        z_terms["step_size"] = (1.0 + c.L * c.eta) * n / 2.0

    Y = noise_coef * c.sigma2
    sublinear = momentum_scale * c.nu * math.sqrt(c.sigma2)

    terms = {f"{k}/T": v / T for k, v in x_terms.items()}
    terms["variance/b"] = Y / b
    terms["variance/sqrt(b)"] = sublinear / math.sqrt(b)
    terms.update(z_terms)
    return BoundBreakdown(
        variant=variant, T=T, b=b, terms=terms,
        X=math.fsum(x_terms.values()), Y=Y, sublinear=sublinear,
        Z=math.fsum(z_terms.values()), x_terms=x_terms, z_terms=z_terms,
    )


def batch_coefficient(variant, beta: float, lam: float = 0.0) -> float:
    """2Y / sigma2 for a variant: the critical batch in units of sigma2/epsilon."""
    variant = Variant(variant)
    if variant.nesterov:
        coef = (2.0 * beta + 1.0) * (1.0 - beta)
    else:
        coef = 2.0 * (1.0 - beta)
    if variant.weight_decay:
        coef += lam
    return coef


# ---------------------------------------------------------------------------
# Steps / SFO complexity model


@dataclass(frozen=True)
class ComplexityModel:
    """Stopping condition X/T + Y/b < epsilon; Z is carried but never used."""

    X: float
    Y: float
    epsilon: float
    Z: float = 0.0
    r_squared: float = float("nan")

    def __post_init__(self):
        if not self.X > 0 or not self.Y >= 0 or not self.epsilon > 0:
            raise ValueError("need X > 0, Y >= 0, epsilon > 0")

    @property
    def min_batch(self) -> float:
        return self.Y / self.epsilon

    def _check(self, b):
        if not b > self.min_batch:
            raise InfeasibleBatchError(f"batch {b} <= Y/epsilon = {self.min_batch}")


def steps_needed(model: ComplexityModel, b) -> float:
    """T(b) = X b / (epsilon b - Y)."""
    model._check(b)
    return model.X * b / (model.epsilon * b - model.Y)


def sfo_complexity(model: ComplexityModel, b) -> float:
    """T(b) b = X b^2 / (epsilon b - Y)."""
    model._check(b)
    return model.X * b * b / (model.epsilon * b - model.Y)


def critical_batch(model: ComplexityModel) -> float:
    """Minimiser of the SFO complexity, 2Y / epsilon."""
    return 2.0 * model.Y / model.epsilon


def critical_batch_muon(sigma2: float, epsilon: float, variant, beta: float, lam: float = 0.0) -> float:
    """Critical batch size predicted from the 1/b coefficient of the variant's bound."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return batch_coefficient(variant, beta, lam) * sigma2 / epsilon


def critical_batch_from_constants(c: BoundConstants, variant, epsilon: float) -> float:
    """Same as ``critical_batch_muon`` but read off ``theorem_bound``'s Y."""
    return 2.0 * theorem_bound(c, variant, 1, 1).Y / epsilon
