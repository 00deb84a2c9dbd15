"""Steps and SFO versus batch size, and the X/T + Y/b model fitted to them."""

# %%
import os

from muonlab.harness.fitting import fit_complexity_model
from muonlab.harness.io import emit_csv, emit_svg_plot, sweep_plot
from muonlab.harness.protocols import FIT_EPSILON, run_batch_fit

out = os.environ.get("MUONLAB_DEMO_OUT", "demo_out")
os.makedirs(out, exist_ok=True)

# %% [markdown]
# Fixed learning rate, target on the running-average loss at the noiseless
# floor plus epsilon. Small batches never get there; past the knee extra
# samples stop buying steps. Takes about half a minute.

# %%
sweep, target = run_batch_fit()
model = fit_complexity_model(sweep, FIT_EPSILON)
for r in sweep.records:
    print(f"b={r.batch:5d}  steps {r.steps_mean:9.1f}  SFO {r.sfo_mean:12.0f}")
print(f"\nfit: X={model.X:.1f}  Y={model.Y:.3f}  r2={model.r_squared:.3f}")
print(f"model b* = 2Y/eps = {2 * model.Y / model.epsilon:.1f}, measured SFO argmin = {sweep.empirical_critical_batch}")

# %%
emit_csv(sweep, os.path.join(out, "batch_sweep.csv"))
emit_svg_plot(sweep_plot(sweep, model, "SFO vs batch size"), os.path.join(out, "sfo.svg"))
emit_svg_plot(sweep_plot(sweep, model, "steps vs batch size", which="steps"), os.path.join(out, "steps.svg"))
