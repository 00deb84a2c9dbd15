"""Desk-scale experiment presets on NoisyQuadratic.

Each preset fixes a problem, an optimizer family, a grid and a target so that
the qualitative effect under study is visible within minutes on a laptop.
The comments explain why each knob sits where it does.
"""

from dataclasses import replace

import numpy as np

from ..optimizer import LrScaling, MuonConfig, Variant
from ..problems import NoisyQuadratic
from .runner import Metric, run_training
from .sweeps import batch_sweep, beta_sweep, stability_sweep

SEEDS = (0, 1, 2, 3, 4)

# ---------------------------------------------------------------------------
# stability threshold
#
# W* sits just outside the spectral ball of radius 1/lambda that weight decay
# confines Muon to, so every stable run is pulled towards the same boundary.
# Over a short budget the largest stable step covers the most ground; steps
# above 1/lambda make (1 - eta*lambda) negative and the iterate flips sign
# every step. Long budgets let all stable step sizes tie at the constrained
# optimum, so the budget is part of the design.

STABILITY_ETA_MULTIPLIERS = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0)
STABILITY_STEPS = 10
STABILITY_BATCH = 128
STABILITY_BETA = 0.9


def stability_problem(lam, sigma2=1.0, seed=0) -> NoisyQuadratic:
    wstar = np.array([1.2, 1.3, 1.4, 1.5]) / lam
    return NoisyQuadratic.from_spectrum(8, 4, sigma2, wstar_singular_values=wstar, seed=seed)


def stability_eta_grid(lam):
    return [k / lam for k in STABILITY_ETA_MULTIPLIERS]


def run_stability(lam, variant=Variant.NESTEROV_WD, seeds=SEEDS, workers=1):
    return stability_sweep(stability_problem(lam), lam, stability_eta_grid(lam), STABILITY_STEPS,
                           seeds, variant=variant, beta=STABILITY_BETA, batch=STABILITY_BATCH,
                           workers=workers)


# ---------------------------------------------------------------------------
# batch-size sweep for the complexity fit
#
# Fixed learning rate, target on the running-average loss. The average obeys
# avg_T = S/T + floor(b), where S is the excess loss accumulated during the
# transient and floor(b) shrinks with b, which is the X/T + Y/b shape. The
# noiseless floor Z is measured and added to epsilon, so epsilon only has to
# absorb the noise term.

FIT_EPSILON = 0.1
FIT_GRID = tuple(2 ** k for k in range(1, 13))
FIT_MAX_STEPS = 10000


def fit_problem(sigma2=1000.0) -> NoisyQuadratic:
    return NoisyQuadratic.from_spectrum(8, 4, sigma2, wstar_singular_values=[1.0] * 4)


def fit_optimizer() -> MuonConfig:
    return MuonConfig.for_variant(Variant.NESTEROV_WD, eta=0.01, beta=0.9, lam=0.01)


def noiseless_floor(problem, cfg, steps=20000) -> float:
    """Mean loss over the second half of an exact-gradient run: the Z part of the target."""
    res = run_training(problem.with_sigma2(0.0), cfg, 1, steps, 0)
    losses = [r.loss for r in res.records[steps // 2:]]
    return float(np.mean(losses))


def run_batch_fit(seeds=SEEDS, workers=1, grid=FIT_GRID, epsilon=FIT_EPSILON):
    """Returns (sweep, target). Fit it with ``fit_complexity_model(sweep, epsilon)``."""
    problem, cfg = fit_problem(), fit_optimizer()
    target = noiseless_floor(problem, cfg) + epsilon
    sweep = batch_sweep(problem, cfg, grid, target, seeds, lr_rule=LrScaling.NONE,
                        metric=Metric.AVG_LOSS, max_steps=FIT_MAX_STEPS, workers=workers)
    return sweep, target


# ---------------------------------------------------------------------------
# momentum sweep
#
# Learning rate scaled linearly with batch size from 0.01 at b = 64. Small
# batches are noise-limited: momentum averages the noise, so larger beta reaches
# full speed at a smaller batch. Large batches take large steps, and the lag of
# a long momentum window (about eta / (1 - beta) per singular value) raises the
# loss floor until the target is out of reach. Both edges move down as beta
# grows. With a fixed learning rate instead, the noise floor of normalized
# updates grows with beta and the ordering reverses.

TREND_BETAS = (0.7, 0.9, 0.95)
TREND_GRID = tuple(2 ** k for k in range(3, 11))
TREND_TARGET = 0.3
TREND_ETA = 0.01
TREND_REFERENCE_BATCH = 64
TREND_LAMBDA = 0.01
TREND_MAX_STEPS = 40000


def trend_problem(sigma2=1000.0) -> NoisyQuadratic:
    return NoisyQuadratic.from_spectrum(8, 4, sigma2, wstar_singular_values=[1.0] * 4)


def run_beta_trend(variants=tuple(Variant), seeds=SEEDS, workers=1, betas=TREND_BETAS):
    return beta_sweep(trend_problem(), betas, variants, TREND_GRID, TREND_TARGET, seeds,
                      eta=TREND_ETA, lam=TREND_LAMBDA, lr_rule=LrScaling.LINEAR,
                      reference_batch=TREND_REFERENCE_BATCH, metric=Metric.AVG_LOSS,
                      max_steps=TREND_MAX_STEPS, workers=workers)
