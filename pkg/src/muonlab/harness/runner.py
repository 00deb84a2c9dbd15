"""Single training trajectories with per-step metrics and optional bound checks."""

import enum
import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..exceptions import BoundViolation, NumericError, StabilityConditionError
from ..optimizer import (
    BaselineConfig,
    BaselineState,
    MuonConfig,
    MuonState,
    baseline_step,
    muon_step,
)
from ..orthogonalize import OrthKind
from ..rng import StepStreams, stream
from ..theory import (
    BOUND_RTOL,
    BoundBreakdown,
    BoundConstants,
    grad_norm_bound,
    param_norm_bound,
    theorem_bound,
)

# Parameter norms beyond this are treated as divergence.
DIVERGENCE_CEILING = 1e150


class Metric(str, enum.Enum):
    LOSS = "loss"
    GRAD_NORM = "grad_norm"
    AVG_GRAD_NORM = "avg_grad_norm"
    AVG_LOSS = "avg_loss"


class Check(str, enum.Enum):
    PARAM_NORM = "param_norm"
    GRAD_NORM = "grad_norm"


@dataclass
class RunRecord:
    step: int
    loss: float
    grad_norm: float
    param_norm: float
    momentum_error: float
    update_norm: float
    avg_grad_norm: float
    avg_loss: float
    degenerate: bool
    seed: int
    fingerprint: str
    elapsed: float = 0.0

    def metric(self, which) -> float:
        return getattr(self, Metric(which).value)


@dataclass
class RunResult:
    records: List[RunRecord]
    status: str  # "completed", "stopped" (target reached) or "diverged"
    final_w: Optional[np.ndarray]
    final_loss: float
    final_grad_norm: float
    seed: int
    fingerprint: str
    w0: Optional[np.ndarray] = None
    initial_momentum_error: float = float("nan")
    violations: list = field(default_factory=list)

    @property
    def diverged(self) -> bool:
        return self.status == "diverged"


def optimizer_to_dict(cfg) -> dict:
    d = asdict(cfg)
    if isinstance(cfg, MuonConfig):
        d["type"] = "muon"
        d["orth"] = {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in d["orth"].items()}
        d["orth"]["ns_coeffs"] = list(d["orth"]["ns_coeffs"])
    else:
        d["type"] = "baseline"
        d["kind"] = cfg.kind.value
    return d


def fingerprint(*parts) -> str:
    """Short stable hash of JSON-serialisable parts."""
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def initial_point(problem, seed, scale=0.1) -> np.ndarray:
    """Gaussian init with Frobenius norm ``scale`` drawn from the run's seed."""
    w0 = stream(seed, 1).standard_normal(problem.shape)
    return w0 * (scale / np.linalg.norm(w0))


def bound_constants(problem, cfg: MuonConfig, w0, delta=0.0) -> BoundConstants:
    """Collect every constant the bounds need from a problem, a config and W_0."""
    return BoundConstants(
        L=problem.lipschitz,
        sigma2=problem.sigma2,
        n=problem.shape[1],
        eta=cfg.eta,
        beta=cfg.beta,
        lam=cfg.lam,
        f_w0=problem.loss(w0),
        w0_norm=float(np.linalg.norm(w0)),
        wstar_norm=float(np.linalg.norm(problem.w_star)),
        delta=delta,
        f_lower_bound=0.0,
    )


def _validate_checks(cfg, checks):
    if not checks:
        return
    if not isinstance(cfg, MuonConfig):
        raise StabilityConditionError("norm-bound checks apply to Muon only")
    if not cfg.weight_decay:
        raise StabilityConditionError("norm-bound checks require weight decay")
    if not cfg.stability_ok:
        raise StabilityConditionError(f"eta={cfg.eta} > 1/lambda={1.0 / cfg.lam}")
    if cfg.orth.kind is not OrthKind.EXACT_SVD:
        raise StabilityConditionError("norm-bound checks require exact orthogonalization")


def run_training(problem, cfg, batch, max_steps, seed, *, w0=None, checks=(),
                 stop_metric=None, stop_target=None, raise_on_violation=True,
                 problem_fingerprint=None) -> RunResult:
    """Run ``max_steps`` optimizer steps from ``w0`` and record one row per step.

    Row ``t`` describes W_t (loss, gradient and parameter norms), the momentum
    error ||M_t - grad f(W_t)||_F and the size of the update to W_{t+1}.
    ``checks`` may contain ``Check.PARAM_NORM`` / ``Check.GRAD_NORM``; every
    iterate, including the final one, is then compared against the bound and a
    BoundViolation is raised on the first excess. With ``stop_metric`` and
    ``stop_target`` the run ends at the first row whose metric is <= target.
    """
    checks = {Check(c) for c in checks}
    _validate_checks(cfg, checks)
    if w0 is None:
        w0 = initial_point(problem, seed)
    w = np.array(w0, dtype=float)
    is_muon = isinstance(cfg, MuonConfig)
    state = MuonState.zeros(w.shape) if is_muon else BaselineState.zeros(w.shape, cfg.kind)
    fp = fingerprint(problem_fingerprint, optimizer_to_dict(cfg), int(batch), int(seed))

    consts = bound_constants(problem, cfg, w) if checks else None
    violations = []

    def check(t, w_t, g_norm):
        if not checks:
            return
        p_norm = float(np.linalg.norm(w_t))
        pairs = []
        if Check.PARAM_NORM in checks:
            pairs.append(("param_norm_bound", p_norm, param_norm_bound(consts, t)))
        if Check.GRAD_NORM in checks:
            pairs.append(("grad_norm_bound", g_norm, grad_norm_bound(consts, t)))
        for name, value, bound in pairs:
            if value > bound * (1.0 + BOUND_RTOL) + BOUND_RTOL:
                violations.append((name, t, value, bound))
                if raise_on_violation:
                    raise BoundViolation(name, t, value, bound)

    records = []
    status = "completed"
    grad_sum = 0.0
    loss_sum = 0.0
    init_merr = float("nan")
    noise = StepStreams(seed, 2)
    start = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(max_steps):
            full = problem.full_gradient(w)
            loss = problem.loss(w)
            g_norm = float(np.linalg.norm(full))
            p_norm = float(np.linalg.norm(w))
            if not (math.isfinite(loss) and math.isfinite(g_norm)) or p_norm > DIVERGENCE_CEILING:
                status = "diverged"
                break
            check(t, w, g_norm)
            grad = problem.minibatch_gradient(w, batch, noise(t))
            try:
                if is_muon:
                    w_next, state = muon_step(w, grad, cfg, state)
                    degenerate = state.last_degenerate
                    merr = float(np.linalg.norm(state.momentum - full))
                else:
                    w_next, state = baseline_step(w, grad, cfg, state)
                    degenerate = False
                    merr = float(np.linalg.norm(state.buf - full))
            except NumericError:
                status = "diverged"
                break
            if t == 0:
                init_merr = merr
            grad_sum += g_norm
            loss_sum += loss
            rec = RunRecord(
                step=t, loss=loss, grad_norm=g_norm, param_norm=p_norm,
                momentum_error=merr, update_norm=float(np.linalg.norm(w_next - w)),
                avg_grad_norm=grad_sum / (t + 1), avg_loss=loss_sum / (t + 1),
                degenerate=degenerate, seed=int(seed), fingerprint=fp,
                elapsed=time.perf_counter() - start,
            )
            records.append(rec)
            w = w_next
            if stop_metric is not None and rec.metric(stop_metric) <= stop_target:
                status = "stopped"
                break

    if status == "diverged":
        final_loss = final_grad = float("inf")
        final_w = None
    else:
        final_w = w
        with np.errstate(over="ignore", invalid="ignore"):
            final_loss = problem.loss(w)
            final_grad = float(np.linalg.norm(problem.full_gradient(w)))
        if not (math.isfinite(final_loss) and math.isfinite(final_grad)):
            status, final_w = "diverged", None
            final_loss = final_grad = float("inf")
        elif status == "completed":
            check(len(records), w, final_grad)
    return RunResult(
        records=records, status=status, final_w=final_w, final_loss=final_loss,
        final_grad_norm=final_grad, seed=int(seed), fingerprint=fp,
        w0=np.array(w0, dtype=float), initial_momentum_error=init_merr,
        violations=violations,
    )


def theorem_check(problem, cfg: MuonConfig, batch, T, seed, w0=None):
    """Measured (1/T) sum_t ||grad f(W_t)||_F against the variant's convergence bound.

    Uses M_0 = 0, so the initial momentum error is ||grad f(W_0)||_F.
    Returns ``(measured, breakdown)``; the run must complete all T steps.
    """
    if w0 is None:
        w0 = initial_point(problem, seed)
    res = run_training(problem, cfg, batch, T, seed, w0=w0)
    if res.status != "completed":
        raise NumericError(f"run ended early with status {res.status!r}")
    delta = float(np.linalg.norm(problem.full_gradient(w0)))
    consts = bound_constants(problem, cfg, w0, delta=delta)
    bound: BoundBreakdown = theorem_bound(consts, cfg.variant, T, batch)
    return res.records[-1].avg_grad_norm, bound
