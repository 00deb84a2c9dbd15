"""Learning rates across the weight-decay threshold eta = 1/lambda."""

# %%
import os

from muonlab.harness.io import emit_csv, emit_svg_plot, stability_plot
from muonlab.harness.protocols import run_stability
from muonlab.harness.sweeps import best_stable_eta

out = os.environ.get("MUONLAB_DEMO_OUT", "demo_out")
os.makedirs(out, exist_ok=True)

# %% [markdown]
# W* sits just beyond the radius-1/lambda ball, so stable runs race towards
# its edge. Past eta = 1/lambda the decay factor turns negative and the iterate
# flips sign each step.

# %%
for lam in (0.0625, 0.125):
    rows = run_stability(lam)
    for r in rows:
        print(f"lambda={lam:<6} eta={r.eta:6.2f} [{r.marker:9s}] grad norm {r.grad_norm_mean:12.4g}")
    best, above_worse = best_stable_eta(rows)
    print(f"  best eta {best:g}; every eta above 1/lambda worse: {above_worse}\n")
    emit_csv(rows, os.path.join(out, f"stability_{lam}.csv"))
    emit_svg_plot(stability_plot(rows, f"lambda = {lam}"), os.path.join(out, f"stability_{lam}.svg"))
