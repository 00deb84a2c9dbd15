"""Larger momentum, smaller critical batch."""

# %%
import os

from muonlab.harness.io import emit_csv
from muonlab.harness.protocols import TREND_BETAS, run_beta_trend
from muonlab.optimizer import Variant
from muonlab.theory import critical_batch_muon

out = os.environ.get("MUONLAB_DEMO_OUT", "demo_out")
os.makedirs(out, exist_ok=True)

# %% [markdown]
# The closed form: 2Y/eps shrinks with beta for every variant.

# %%
for v in Variant:
    vals = [critical_batch_muon(1.0, 1.0, v, b, 0.1) for b in TREND_BETAS]
    print(f"{v.value:12s} " + "  ".join(f"{x:.3f}" for x in vals) + "  (x sigma2/eps)")

# %% [markdown]
# Measured: learning rate scaled linearly with batch size. A few minutes on
# one core; pass workers=N to spread it out.

# %%
res = run_beta_trend()
for row in res.rows:
    print(f"{row.variant.value:12s} beta={row.beta:<5} measured b*={row.empirical_cbs}")
print("non-increasing for every variant:", all(res.trend_ok.values()))
emit_csv(res, os.path.join(out, "beta_trend.csv"))
