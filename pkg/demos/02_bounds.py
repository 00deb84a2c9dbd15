"""Parameter, gradient and convergence bounds along real trajectories."""

# %%
import math

import numpy as np

from muonlab.harness.runner import Check, run_training, theorem_check
from muonlab.optimizer import MuonConfig, Variant
from muonlab.problems import NoisyQuadratic

p = NoisyQuadratic.from_spectrum(8, 4, sigma2=4.0, spectrum=[2.0, 1.5, 1.0, 1.0, 1.0, 0.8, 0.6, 0.5],
                                 rotate=True, seed=0)

# %% [markdown]
# With decoupled weight decay and eta <= 1/lambda, ||W_t|| can't exceed
# (1 - eta lambda)^t ||W_0|| + sqrt(n)/lambda. Start far outside that ball and
# watch the norm shrink onto it.

# %%
lam = 0.5
for eta in (0.2, 1.0, 1 / lam):
    cfg = MuonConfig.for_variant("wd", eta=eta, beta=0.9, lam=lam)
    res = run_training(p, cfg, 8, 60, seed=0, w0=10 * np.ones(p.shape),
                       checks=(Check.PARAM_NORM, Check.GRAD_NORM))
    norms = [r.param_norm for r in res.records]
    print(f"eta={eta:4.1f}: ||W_0||={norms[0]:.2f}  ||W_5||={norms[5]:.2f}  ||W_59||={norms[-1]:.3f}"
          f"  sqrt(n)/lambda={math.sqrt(4) / lam:.1f}  violations={len(res.violations)}")

# %% [markdown]
# The convergence bounds hold too, but loosely: they carry an O(n) floor.

# %%
for v in Variant:
    cfg = MuonConfig.for_variant(v, eta=0.01, beta=0.9, lam=0.1)
    measured, bound = theorem_check(p, cfg, 8, 1000, seed=0)
    print(f"{v.value:12s} measured {measured:.3f}  bound {bound.total:.2f}  "
          f"(X/T {bound.X / 1000:.2f}, Y/b {bound.Y / 8:.3f}, Z {bound.Z:.2f})")
