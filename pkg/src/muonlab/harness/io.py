"""CSV and SVG artifacts.

CSV schemas (header rows are fixed; floats are written with ``repr`` so files
round-trip exactly and are byte-identical for identical inputs):

run records
    step, loss, grad_norm, param_norm, momentum_error, update_norm,
    avg_grad_norm, avg_loss, degenerate, seed, fingerprint
batch sweeps
    batch, eta, steps_mean, steps_std, sfo_mean, reached, repeats, steps, target, metric, is_min
stability sweeps
    eta, lam, threshold, marker, grad_norm_mean, grad_norm_std, loss_mean, diverged, runs
beta sweeps
    variant, beta, empirical_cbs, predicted_cbs
bound breakdowns
    term, value

Wall-clock time is kept in memory only, so it never breaks reproducibility.
"""

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import List, Sequence
from xml.sax.saxutils import escape

from ..exceptions import ArtifactIOError
from ..theory import BoundBreakdown, sfo_complexity, steps_needed
from .runner import RunRecord
from .sweeps import BatchSweep, BetaSweep, NotReached, StabilityRow, SweepRecord

RUN_HEADER = ["step", "loss", "grad_norm", "param_norm", "momentum_error", "update_norm",
              "avg_grad_norm", "avg_loss", "degenerate", "seed", "fingerprint"]
SWEEP_HEADER = ["batch", "eta", "steps_mean", "steps_std", "sfo_mean", "reached", "repeats",
                "steps", "target", "metric", "is_min"]
STABILITY_HEADER = ["eta", "lam", "threshold", "marker", "grad_norm_mean", "grad_norm_std",
                    "loss_mean", "diverged", "runs"]
BETA_HEADER = ["variant", "beta", "empirical_cbs", "predicted_cbs"]
BREAKDOWN_HEADER = ["term", "value"]


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, enum.Enum):
        return str(v.value)
    if v is NotReached:
        return "not_reached"
    if v is None:
        return ""
    return str(v)


def _run_row(r: RunRecord):
    return [r.step, r.loss, r.grad_norm, r.param_norm, r.momentum_error, r.update_norm,
            r.avg_grad_norm, r.avg_loss, r.degenerate, r.seed, r.fingerprint]


def _sweep_rows(records: Sequence[SweepRecord], min_index=None):
    out = []
    for i, r in enumerate(records):
        steps = ";".join(_fmt(s) for s in r.steps)
        out.append([r.batch, r.eta, r.steps_mean, r.steps_std, r.sfo_mean, r.reached,
                    len(r.steps), steps, r.target, r.metric, i == min_index])
    return out


def _stability_row(r: StabilityRow):
    return [r.eta, r.lam, r.threshold, r.marker, r.grad_norm_mean, r.grad_norm_std,
            r.loss_mean, r.diverged, r.runs]


def _tabulate(items):
    """(header, rows) for any supported artifact type."""
    if isinstance(items, BatchSweep):
        return SWEEP_HEADER, _sweep_rows(items.records, items.empirical_index)
    if isinstance(items, BetaSweep):
        return BETA_HEADER, [[r.variant, r.beta, r.empirical_cbs, r.predicted_cbs] for r in items.rows]
    if isinstance(items, BoundBreakdown):
        return BREAKDOWN_HEADER, [list(p) for p in items.rows()]
    items = list(items)
    if not items:
        return None, []
    first = items[0]
    if isinstance(first, RunRecord):
        return RUN_HEADER, [_run_row(r) for r in items]
    if isinstance(first, SweepRecord):
        return SWEEP_HEADER, _sweep_rows(items)
    if isinstance(first, StabilityRow):
        return STABILITY_HEADER, [_stability_row(r) for r in items]
    raise TypeError(f"don't know how to write {type(first).__name__} rows")


def emit_csv(items, path, header=None) -> None:
    """Write run records, sweeps or a bound breakdown to ``path``.

    An empty sequence produces a header-only file (``header`` defaults to the
    run-record schema).
    """
    found, rows = _tabulate(items)
    header = found or header or RUN_HEADER
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise ArtifactIOError(f"cannot write CSV to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# SVG


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    style: str = "line"  # "line", "scatter" or "both"
    dashed: bool = False


@dataclass
class PlotSpec:
    series: List[Series]
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    vlines: List[tuple] = field(default_factory=list)  # (x, label)
    width: int = 640
    height: int = 420


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]
_MARGIN = (70, 20, 40, 50)  # left, right, top, bottom


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 6)
        return [float(k) for k in range(a, b + 1, step)]
    span = hi - lo
    raw = span / 5 if span > 0 else 1.0
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _label(v, log):
    if log:
        return f"1e{int(v)}" if abs(v) > 3 else f"{10**v:g}"
    return f"{v:.4g}"


def render_svg(spec: PlotSpec) -> str:
    """Render a plot to an SVG string.

    Non-finite y values (diverged runs) are drawn at the top edge of the axes
    as hollow markers.
    """
    def tx(v, log):
        return math.log10(v) if log else v

    xs, ys = [], []
    for s in spec.series:
        for x, y in zip(s.x, s.y):
            if (not spec.logx or x > 0) and math.isfinite(x):
                xs.append(tx(x, spec.logx))
            if math.isfinite(y) and (not spec.logy or y > 0):
                ys.append(tx(y, spec.logy))
    for x, _ in spec.vlines:
        if not spec.logx or x > 0:
            xs.append(tx(x, spec.logx))
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    left, right, top, bottom = _MARGIN
    pw, ph = spec.width - left - right, spec.height - top - bottom

    def px(v):
        return left + (tx(v, spec.logx) - x0) / (x1 - x0) * pw

    def py(v):
        if not math.isfinite(v) or (spec.logy and v <= 0):
            return float(top)
        return top + (1.0 - (tx(v, spec.logy) - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1, spec.logx):
        if x0 <= t <= x1:
            p = left + (t - x0) / (x1 - x0) * pw
            out.append(f'<line x1="{p:.2f}" y1="{top + ph}" x2="{p:.2f}" y2="{top + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{p:.2f}" y="{top + ph + 16}" text-anchor="middle">{_label(t, spec.logx)}</text>')
    for t in _ticks(y0, y1, spec.logy):
        if y0 <= t <= y1:
            p = top + (1.0 - (t - y0) / (y1 - y0)) * ph
            out.append(f'<line x1="{left - 4}" y1="{p:.2f}" x2="{left}" y2="{p:.2f}" stroke="black"/>')
            out.append(f'<text x="{left - 6}" y="{p + 4:.2f}" text-anchor="end">{_label(t, spec.logy)}</text>')

    for x, label in spec.vlines:
        p = px(x)
        out.append(f'<line x1="{p:.2f}" y1="{top}" x2="{p:.2f}" y2="{top + ph}" stroke="gray" stroke-dasharray="5,4"/>')
        out.append(f'<text x="{p + 3:.2f}" y="{top + 12}" fill="gray">{escape(str(label))}</text>')

    for i, s in enumerate(spec.series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = [(px(x), py(y), math.isfinite(y)) for x, y in zip(s.x, s.y)
               if math.isfinite(x) and (not spec.logx or x > 0)]
        if s.style in ("line", "both"):
            seg = " ".join(f"{a:.2f},{b:.2f}" for a, b, ok in pts if ok)
            dash = ' stroke-dasharray="6,3"' if s.dashed else ""
            if seg:
                out.append(f'<polyline points="{seg}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        if s.style in ("scatter", "both"):
            for a, b, ok in pts:
                fill = color if ok else "none"
                out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="{fill}" stroke="{color}"/>')
        ly = top + 14 + 14 * i
        out.append(f'<line x1="{left + pw - 120}" y1="{ly - 4}" x2="{left + pw - 100}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 96}" y="{ly}">{escape(s.label)}</text>')

    out.append(f'<text x="{spec.width / 2:.1f}" y="{top - 14}" text-anchor="middle" font-size="13">{escape(spec.title)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{spec.height - 10}" text-anchor="middle">{escape(spec.xlabel)}</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(spec.ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_plot(spec: PlotSpec, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_svg(spec))
    except OSError as exc:
        raise ArtifactIOError(f"cannot write SVG to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# canned plots


def run_plot(records: Sequence[RunRecord], title="") -> PlotSpec:
    steps = [r.step for r in records]
    return PlotSpec(
        series=[Series("loss", steps, [r.loss for r in records]),
                Series("grad norm", steps, [r.grad_norm for r in records])],
        title=title, xlabel="step", ylabel="value", logy=True,
    )


def stability_plot(rows: Sequence[StabilityRow], title="") -> PlotSpec:
    etas = [r.eta for r in rows]
    return PlotSpec(
        series=[Series("final grad norm", etas, [r.grad_norm_mean for r in rows], style="both"),
                Series("final loss", etas, [r.loss_mean for r in rows], style="both")],
        title=title, xlabel="learning rate", ylabel="value", logx=True, logy=True,
        vlines=[(rows[0].threshold, "1/lambda")] if rows else [],
    )


def sweep_plot(sweep: BatchSweep, model=None, title="", which="sfo") -> PlotSpec:
    """Measured steps (``which="steps"``) or SFO against batch size, with the model curve."""
    b = [r.batch for r in sweep.records]
    measured = [r.sfo_mean if which == "sfo" else r.steps_mean for r in sweep.records]
    series = [Series("measured", b, measured, style="both")]
    vlines = []
    if model is not None:
        fn = sfo_complexity if which == "sfo" else steps_needed
        lo = max(model.min_batch * 1.02, min(b))
        grid = [lo * (max(b) / lo) ** (k / 99) for k in range(100)] if max(b) > lo else []
        series.append(Series("model", grid, [fn(model, x) for x in grid], dashed=True))
        vlines.append((2.0 * model.Y / model.epsilon, "b* model"))
    if sweep.empirical_critical_batch is not None:
        vlines.append((sweep.empirical_critical_batch, "b* measured"))
    return PlotSpec(series=series, title=title, xlabel="batch size",
                    ylabel="SFO" if which == "sfo" else "steps", logx=True, logy=True, vlines=vlines)
