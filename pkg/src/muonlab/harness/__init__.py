"""Training runs, sweeps, model fitting and artifacts."""

from .fitting import fit_complexity_arrays, fit_complexity_model
from .io import PlotSpec, Series, emit_csv, emit_svg_plot, render_svg
from .runner import Check, Metric, RunRecord, RunResult, run_training, theorem_check
from .sweeps import (
    NotReached,
    SweepRecord,
    batch_sweep,
    beta_sweep,
    stability_sweep,
    steps_to_threshold,
)
