"""Grid experiments built on ``run_training``: stability, batch size and momentum.

Every grid point is an independent job keyed by (config, batch, seed), so the
results do not depend on execution order. ``workers > 1`` fans the jobs out
over processes; the collected rows are identical to a serial run.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from ..optimizer import LrScaling, MuonConfig, Variant, scaled_lr
from ..theory import critical_batch_muon
from .runner import Metric, run_training


class _NotReached:
    """Sentinel for a run that never met its target."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NotReached"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_NotReached, ())


NotReached = _NotReached()


def steps_to_threshold(records, metric=Metric.LOSS, target=0.0):
    """Index of the first record whose metric is <= target, else ``NotReached``.

    ``records`` may be RunRecords or plain numbers (then ``metric`` is ignored).
    """
    for i, rec in enumerate(records):
        value = rec if isinstance(rec, (int, float, np.floating)) else rec.metric(metric)
        if value <= target:
            return i
    return NotReached


# ---------------------------------------------------------------------------
# job plumbing


@dataclass(frozen=True)
class _Job:
    problem: object
    cfg: object
    batch: int
    max_steps: int
    seed: int
    metric: Optional[Metric]
    target: Optional[float]


def _run_job(job):
    res = run_training(job.problem, job.cfg, job.batch, job.max_steps, job.seed,
                       stop_metric=job.metric, stop_target=job.target)
    hit = NotReached
    if job.metric is not None:
        hit = steps_to_threshold(res.records, job.metric, job.target)
    return res.status, res.final_loss, res.final_grad_norm, hit


def _run_jobs(jobs, workers=1):
    if workers <= 1 or len(jobs) < 2:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _with_eta(cfg, eta):
    return replace(cfg, eta=float(eta))


# ---------------------------------------------------------------------------
# stability sweep


@dataclass
class StabilityRow:
    eta: float
    lam: float
    threshold: float
    marker: str  # "below", "threshold" or "above"
    grad_norm_mean: float
    grad_norm_std: float
    loss_mean: float
    diverged: int
    runs: int


def _marker(eta, lam):
    prod = eta * lam
    if abs(prod - 1.0) <= 1e-12:
        return "threshold"
    return "below" if prod < 1.0 else "above"


def stability_sweep(problem, lam, eta_grid, steps, seeds, *, variant=Variant.NESTEROV_WD,
                    beta=0.9, batch=128, base_cfg=None, workers=1) -> List[StabilityRow]:
    """Final gradient norm and loss per learning rate at fixed weight decay.

    A diverged seed makes the row's means infinite; plots draw it at the ceiling.
    """
    if not lam > 0:
        raise ValueError("stability sweeps need lambda > 0")
    if base_cfg is None:
        base_cfg = MuonConfig.for_variant(variant, eta=1.0, beta=beta, lam=lam)
    seeds = list(seeds)
    jobs = [_Job(problem, _with_eta(base_cfg, eta), batch, steps, s, None, None)
            for eta in eta_grid for s in seeds]
    out = _run_jobs(jobs, workers)
    rows = []
    for i, eta in enumerate(eta_grid):
        chunk = out[i * len(seeds):(i + 1) * len(seeds)]
        grads = np.array([c[2] for c in chunk])
        losses = np.array([c[1] for c in chunk])
        n_div = sum(c[0] == "diverged" for c in chunk)
        finite = n_div == 0
        rows.append(StabilityRow(
            eta=float(eta), lam=float(lam), threshold=1.0 / lam, marker=_marker(eta, lam),
            grad_norm_mean=float(grads.mean()) if finite else math.inf,
            grad_norm_std=float(grads.std()) if finite else math.inf,
            loss_mean=float(losses.mean()) if finite else math.inf,
            diverged=int(n_div), runs=len(seeds),
        ))
    return rows


def best_stable_eta(rows: List[StabilityRow]):
    """(eta with the lowest mean final gradient norm, whether every eta above 1/lambda is worse)."""
    best = min(rows, key=lambda r: r.grad_norm_mean)
    stable = [r for r in rows if r.marker != "above"]
    top = max(stable, key=lambda r: r.eta).grad_norm_mean if stable else math.inf
    above_worse = all(r.grad_norm_mean > top for r in rows if r.marker == "above")
    return best.eta, above_worse


# ---------------------------------------------------------------------------
# batch sweep


@dataclass
class SweepRecord:
    batch: int
    eta: float
    steps: List[object]  # per-seed T-hat, an int or NotReached
    target: float
    metric: str

    @property
    def reached(self) -> int:
        return sum(s is not NotReached for s in self.steps)

    @property
    def feasible(self) -> bool:
        return self.reached == len(self.steps)

    @property
    def steps_mean(self) -> float:
        if not self.feasible:
            return math.inf
        return float(np.mean(self.steps))

    @property
    def steps_std(self) -> float:
        if not self.feasible:
            return math.inf
        return float(np.std(self.steps))

    @property
    def sfo_mean(self) -> float:
        return self.steps_mean * self.batch


@dataclass
class BatchSweep:
    records: List[SweepRecord]
    lr_rule: LrScaling
    reference_batch: int

    @property
    def batches(self):
        return [r.batch for r in self.records]

    @property
    def empirical_index(self) -> Optional[int]:
        sfo = [r.sfo_mean for r in self.records]
        if not any(math.isfinite(x) for x in sfo):
            return None
        return int(np.argmin(sfo))

    @property
    def empirical_critical_batch(self) -> Optional[int]:
        i = self.empirical_index
        return None if i is None else self.records[i].batch


def batch_sweep(problem, cfg, batch_grid, target, seeds, *, lr_rule=LrScaling.SQRT,
                reference_batch=512, metric=Metric.LOSS, max_steps=10000, workers=1) -> BatchSweep:
    """Steps and SFO to reach ``target`` at each batch size, averaged over seeds.

    ``cfg.eta`` is the learning rate at ``reference_batch``; each grid point uses
    ``scaled_lr(cfg.eta, b, lr_rule, reference_batch)``. A batch is feasible when
    every seed reaches the target within ``max_steps``.
    """
    grid = [int(b) for b in batch_grid]
    if grid != sorted(grid) or len(set(grid)) != len(grid):
        raise ValueError("batch grid must be strictly ascending")
    lr_rule = LrScaling(lr_rule)
    metric = Metric(metric)
    seeds = list(seeds)
    etas = [scaled_lr(cfg.eta, b, lr_rule, reference_batch) for b in grid]
    jobs = [_Job(problem, _with_eta(cfg, eta), b, max_steps, s, metric, target)
            for b, eta in zip(grid, etas) for s in seeds]
    out = _run_jobs(jobs, workers)
    records = []
    for i, (b, eta) in enumerate(zip(grid, etas)):
        hits = [c[3] for c in out[i * len(seeds):(i + 1) * len(seeds)]]
        records.append(SweepRecord(batch=b, eta=eta, steps=hits, target=float(target),
                                   metric=metric.value))
    return BatchSweep(records=records, lr_rule=lr_rule, reference_batch=reference_batch)


# ---------------------------------------------------------------------------
# momentum sweep


@dataclass
class BetaRow:
    variant: Variant
    beta: float
    empirical_cbs: Optional[int]
    predicted_cbs: float
    sweep: BatchSweep = field(repr=False)


@dataclass
class BetaSweep:
    rows: List[BetaRow]
    batch_grid: List[int]
    trend_ok: dict  # variant -> bool
    messages: List[str]


def non_increasing_on_grid(values, grid, slack=1) -> bool:
    """True if each value sits at most ``slack`` grid steps above the previous one.

    ``None`` (no feasible batch) breaks the trend.
    """
    if any(v is None for v in values):
        return False
    idx = [list(grid).index(v) for v in values]
    return all(b <= a + slack for a, b in zip(idx, idx[1:]))


def beta_sweep(problem, beta_grid, variants, batch_grid, target, seeds, *, eta, lam=0.0,
               lr_rule=LrScaling.LINEAR, reference_batch=512, metric=Metric.LOSS,
               max_steps=10000, epsilon=None, slack=1, workers=1) -> BetaSweep:
    """Empirical critical batch per (variant, beta), next to the closed-form prediction.

    The trend check is soft: a non-monotone variant is reported in ``messages``
    and ``trend_ok`` but nothing is raised.
    """
    for beta in beta_grid:
        if not 0.0 <= beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {beta}")
    epsilon = target if epsilon is None else epsilon
    rows, trend, messages = [], {}, []
    for v in variants:
        v = Variant(v)
        found = []
        for beta in beta_grid:
            cfg = MuonConfig.for_variant(v, eta=eta, beta=beta, lam=lam)
            sweep = batch_sweep(problem, cfg, batch_grid, target, seeds, lr_rule=lr_rule,
                                reference_batch=reference_batch, metric=metric,
                                max_steps=max_steps, workers=workers)
            pred = critical_batch_muon(problem.sigma2, epsilon, v, beta, lam if v.weight_decay else 0.0)
            rows.append(BetaRow(v, float(beta), sweep.empirical_critical_batch, pred, sweep))
            found.append(sweep.empirical_critical_batch)
        trend[v] = non_increasing_on_grid(found, batch_grid, slack)
        if not trend[v]:
            messages.append(f"{v.value}: empirical critical batch {found} is not non-increasing in beta")
    return BetaSweep(rows=rows, batch_grid=list(batch_grid), trend_ok=trend, messages=messages)
