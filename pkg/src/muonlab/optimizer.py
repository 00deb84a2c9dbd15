"""Muon (four variants) and textbook Momentum-SGD / AdamW baselines.

All steps are pure: they take the parameter, the minibatch gradient and an
immutable state, and return a new parameter and a new state.
"""

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exceptions import DimensionError, NumericError
from .matcore import as_matrix
from .orthogonalize import OrthKind, OrthMethod, _dispatch


class Variant(str, enum.Enum):
    """The four Muon variants: Nesterov on/off crossed with weight decay on/off."""

    PLAIN = "plain"
    NESTEROV = "nesterov"
    WD = "wd"
    NESTEROV_WD = "nesterov_wd"

    @property
    def nesterov(self) -> bool:
        return self in (Variant.NESTEROV, Variant.NESTEROV_WD)

    @property
    def weight_decay(self) -> bool:
        return self in (Variant.WD, Variant.NESTEROV_WD)

    @classmethod
    def from_flags(cls, nesterov: bool, weight_decay: bool) -> "Variant":
        return {
            (False, False): cls.PLAIN,
            (True, False): cls.NESTEROV,
            (False, True): cls.WD,
            (True, True): cls.NESTEROV_WD,
        }[(bool(nesterov), bool(weight_decay))]


@dataclass(frozen=True)
class MuonConfig:
    eta: float
    beta: float = 0.9
    lam: float = 0.0
    nesterov: bool = False
    weight_decay: bool = False
    orth: OrthMethod = field(default_factory=OrthMethod)

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if self.weight_decay and not self.lam > 0:
            raise ValueError("weight decay requires lambda > 0")

    @property
    def variant(self) -> Variant:
        return Variant.from_flags(self.nesterov, self.weight_decay)

    @property
    def stability_ok(self) -> bool:
        """True unless weight decay is on and eta > 1/lambda.

        Configs that violate the condition are allowed (stability sweeps cross it
        on purpose); bound checks refuse them.
        """
        return (not self.weight_decay) or self.eta * self.lam <= 1.0

    @classmethod
    def for_variant(cls, variant, eta, beta, lam=0.0, orth=None) -> "MuonConfig":
        variant = Variant(variant)
        return cls(
            eta=eta,
            beta=beta,
            lam=lam if variant.weight_decay else 0.0,
            nesterov=variant.nesterov,
            weight_decay=variant.weight_decay,
            orth=orth or OrthMethod(),
        )


@dataclass(frozen=True)
class MuonState:
    momentum: np.ndarray
    step_count: int = 0
    last_degenerate: bool = False
    last_path: Optional[OrthKind] = None

    @classmethod
    def zeros(cls, shape) -> "MuonState":
        return cls(momentum=np.zeros(shape))


def _check_step_inputs(w, grad, buffers):
    w = as_matrix(w, name="w")
    try:
        grad = as_matrix(grad, name="grad")
    except NumericError:
        raise NumericError("gradient contains non-finite entries") from None
    if grad.shape != w.shape:
        raise DimensionError(f"gradient shape {grad.shape} != parameter shape {w.shape}")
    for buf in buffers:
        if buf.shape != w.shape:
            raise DimensionError(f"state shape {buf.shape} != parameter shape {w.shape}")
    return w, grad


def muon_direction_input(momentum, grad, cfg: MuonConfig):
    """Return (M_t, C_t) for one step given M_{t-1} and the minibatch gradient."""
    beta = cfg.beta
    m_new = beta * momentum + (1.0 - beta) * grad
    c = beta * m_new + (1.0 - beta) * grad if cfg.nesterov else m_new
    return m_new, c


def muon_step(w, grad, cfg: MuonConfig, state: MuonState):
    """One Muon update. Returns ``(w_next, state_next)``; inputs are not modified.

    A zero ``C_t`` yields a zero direction and the step reduces to pure decay;
    ``state_next.last_degenerate`` records that.
    """
    w, grad = _check_step_inputs(w, grad, [state.momentum])
    m_new, c = muon_direction_input(state.momentum, grad, cfg)
    res = _dispatch(c, cfg.orth)
    if cfg.weight_decay:
        w_next = (1.0 - cfg.eta * cfg.lam) * w - cfg.eta * res.direction
    else:
        w_next = w - cfg.eta * res.direction
    new_state = MuonState(
        momentum=m_new,
        step_count=state.step_count + 1,
        last_degenerate=res.degenerate,
        last_path=res.path,
    )
    return w_next, new_state


# ---------------------------------------------------------------------------
# Baselines


class BaselineKind(str, enum.Enum):
    MOMENTUM_SGD = "momentum_sgd"
    ADAMW = "adamw"


class LrScaling(str, enum.Enum):
    SQRT = "sqrt"
    LINEAR = "linear"
    NONE = "none"


def scaled_lr(base_eta, batch, rule=LrScaling.SQRT, reference_batch=512) -> float:
    """Learning rate for ``batch`` given ``base_eta`` tuned at ``reference_batch``."""
    if batch < 1 or reference_batch < 1:
        raise ValueError("batch sizes must be >= 1")
    rule = LrScaling(rule)
    ratio = batch / reference_batch
    if rule is LrScaling.SQRT:
        return base_eta * math.sqrt(ratio)
    if rule is LrScaling.LINEAR:
        return base_eta * ratio
    return float(base_eta)


@dataclass(frozen=True)
class BaselineConfig:
    kind: BaselineKind
    eta: float
    momentum: float = 0.9  # momentum for SGD, beta1 for AdamW
    beta2: float = 0.999
    eps: float = 1e-8
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BaselineKind(self.kind))
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ValueError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")


@dataclass(frozen=True)
class BaselineState:
    buf: np.ndarray  # SGD momentum buffer or Adam first moment
    sq: Optional[np.ndarray] = None  # Adam second moment
    step_count: int = 0

    @classmethod
    def zeros(cls, shape, kind) -> "BaselineState":
        kind = BaselineKind(kind)
        sq = np.zeros(shape) if kind is BaselineKind.ADAMW else None
        return cls(buf=np.zeros(shape), sq=sq)


def baseline_step(w, grad, cfg: BaselineConfig, state: BaselineState):
    """Heavy-ball SGD (decoupled decay) or AdamW, returning ``(w_next, state_next)``."""
    bufs = [state.buf] + ([state.sq] if state.sq is not None else [])
    w, grad = _check_step_inputs(w, grad, bufs)
    t = state.step_count + 1
    decayed = (1.0 - cfg.eta * cfg.lam) * w
    if cfg.kind is BaselineKind.MOMENTUM_SGD:
        buf = cfg.momentum * state.buf + grad
        return decayed - cfg.eta * buf, replace(state, buf=buf, step_count=t)

    b1, b2 = cfg.momentum, cfg.beta2
    m = b1 * state.buf + (1.0 - b1) * grad
    v = b2 * state.sq + (1.0 - b2) * grad * grad
    m_hat = m / (1.0 - b1**t)
    v_hat = v / (1.0 - b2**t)
    w_next = decayed - cfg.eta * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return w_next, BaselineState(buf=m, sq=v, step_count=t)
