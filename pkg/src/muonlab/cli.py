"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or config, 2 a checked bound or
orthogonalizer test failed, 3 an artifact could not be read or written.
Summaries go to stdout as ``key=value`` lines; artifacts go to the output dir.
"""

import argparse
import math
import os
import sys

from .exceptions import BoundViolation, FitError, MuonlabError
from .harness import protocols
from .harness.config import build_optimizer, build_problem, load_config, write_snapshot
from .harness.fitting import fit_complexity_model
from .harness.io import emit_csv, emit_svg_plot, run_plot, stability_plot, sweep_plot
from .harness.runner import Check, run_training, theorem_check
from .harness.sweeps import batch_sweep, best_stable_eta, beta_sweep, stability_sweep
from .optimizer import MuonConfig, Variant
from .orthogonalize import OrthMethod, ns_vs_exact
from .rng import spread_spectrum_matrix, stream
from .theory import critical_batch_muon

EXIT_OK, EXIT_INVALID, EXIT_ASSERT, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for failed checks here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return f"{x:g}" if isinstance(x, float) else str(x)


def _say(**kv):
    print(" ".join(f"{k}={_fmt(v)}" for k, v in kv.items()))


def _config(args, extra=()):
    overrides = list(args.set or []) + list(extra)
    if getattr(args, "out", None):
        overrides.append(f'output_dir="{args.out}"')
    return load_config(args.config, overrides)


def _flag_overrides(args, mapping):
    out = []
    for attr, key in mapping.items():
        v = getattr(args, attr, None)
        if v is not None:
            out.append(f"{key}={v}" if not isinstance(v, str) else f'{key}="{v}"')
    return out


_RUN_FLAGS = {"variant": "optimizer.variant", "eta": "optimizer.eta", "beta": "optimizer.beta",
              "lam": "optimizer.lam", "orth": "optimizer.orth", "batch": "run.batch",
              "steps": "run.max_steps"}


# ---------------------------------------------------------------------------
# subcommands


def cmd_orthcheck(args):
    rng = stream(args.seed, 7)
    method = OrthMethod.newton_schulz(steps=args.ns_steps)
    reports = [ns_vs_exact(spread_spectrum_matrix(args.m, args.n, rng), method) for _ in range(args.trials)]
    failed = sum(not r.ok for r in reports)
    _say(command="orthcheck", m=args.m, n=args.n, trials=args.trials, failed=failed,
         max_distance=max(r.distance for r in reports), tolerance=reports[0].tolerance,
         sv_min=min(r.sv_min for r in reports), sv_max=max(r.sv_max for r in reports))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "orthcheck.csv")
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("trial,distance,tolerance,sv_min,sv_max,ok\n")
                for i, r in enumerate(reports):
                    fh.write(f"{i},{r.distance!r},{r.tolerance!r},{r.sv_min!r},{r.sv_max!r},{int(r.ok)}\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
    return EXIT_OK if failed == 0 else EXIT_ASSERT


def cmd_train(args):
    cfg = _config(args, _flag_overrides(args, _RUN_FLAGS) + ([f"run.seeds=[{args.seed}]"] if args.seed is not None else []))
    opt = build_optimizer(cfg)
    checks = (Check.PARAM_NORM, Check.GRAD_NORM) if args.assert_bounds else ()
    problem = build_problem(cfg)  # validation happens before anything is written
    out = cfg["output_dir"]
    seed = cfg["run"]["seeds"][0]
    res = run_training(problem, opt, cfg["run"]["batch"], cfg["run"]["max_steps"], seed,
                       checks=checks, problem_fingerprint=cfg["problem"])
    write_snapshot(cfg, out)
    emit_csv(res.records, os.path.join(out, "run.csv"))
    emit_svg_plot(run_plot(res.records, title="training run"), os.path.join(out, "run.svg"))
    _say(command="train", status=res.status, steps=len(res.records), final_loss=res.final_loss,
         final_grad_norm=res.final_grad_norm, fingerprint=res.fingerprint)
    return EXIT_OK


def cmd_verify_bounds(args):
    cfg = _config(args, _flag_overrides(args, _RUN_FLAGS))
    opt = build_optimizer(cfg)
    if not isinstance(opt, MuonConfig):
        raise ValueError("verify-bounds needs a Muon optimizer")
    problem = build_problem(cfg)
    out = cfg["output_dir"]
    write_snapshot(cfg, out)
    batch, steps = cfg["run"]["batch"], cfg["run"]["max_steps"]
    checks = (Check.PARAM_NORM, Check.GRAD_NORM) if opt.weight_decay else ()
    worst = 0.0
    for seed in cfg["run"]["seeds"]:
        run_training(problem, opt, batch, steps, seed, checks=checks)
        measured, bound = theorem_check(problem, opt, batch, steps, seed)
        worst = max(worst, measured / bound.total)
        if measured > bound.total:
            raise BoundViolation("theorem_bound", steps, measured, bound.total)
    emit_csv(bound, os.path.join(out, "bound_breakdown.csv"))
    _say(command="verify-bounds", variant=opt.variant.value, runs=len(cfg["run"]["seeds"]),
         norm_checks="on" if checks else "off", violations=0, worst_ratio=worst)
    return EXIT_OK


def cmd_sweep_eta(args):
    if args.preset:
        lam = args.lam if args.lam is not None else 0.0625
        rows = protocols.run_stability(lam, workers=args.workers)
        cfg = {"preset": "stability", "lambda": lam}
        out_dir = args.out or "out"
    else:
        cfg = _config(args, _flag_overrides(args, _RUN_FLAGS))
        opt = build_optimizer(cfg)
        if not isinstance(opt, MuonConfig) or not opt.weight_decay:
            raise ValueError("sweep-eta needs a Muon variant with weight decay")
        lam = opt.lam
        rows = stability_sweep(build_problem(cfg), lam, cfg["sweep"]["eta_grid"], cfg["run"]["max_steps"],
                               cfg["run"]["seeds"], batch=cfg["run"]["batch"], base_cfg=opt,
                               workers=cfg["sweep"]["workers"])
        out_dir = cfg["output_dir"]
    write_snapshot(cfg, out_dir)
    emit_csv(rows, os.path.join(out_dir, "stability.csv"))
    emit_svg_plot(stability_plot(rows, title=f"lambda = {lam:g}"), os.path.join(out_dir, "stability.svg"))
    best, above_worse = best_stable_eta(rows)
    _say(command="sweep-eta", lam=lam, threshold=1.0 / lam, best_eta=best,
         above_threshold_worse="yes" if above_worse else "no")
    return EXIT_OK


def cmd_sweep_batch(args):
    if args.preset:
        sweep, target = protocols.run_batch_fit(workers=args.workers)
        epsilon = protocols.FIT_EPSILON
        cfg = {"preset": "batch_fit", "target": target, "epsilon": epsilon}
        out_dir = args.out or "out"
    else:
        cfg = _config(args, _flag_overrides(args, _RUN_FLAGS))
        run, sw = cfg["run"], cfg["sweep"]
        if run["target"] is None:
            raise ValueError("sweep-batch needs run.target")
        target = float(run["target"])
        epsilon = float(sw["epsilon"] or target)
        sweep = batch_sweep(build_problem(cfg), build_optimizer(cfg), sw["batch_grid"], target,
                            run["seeds"], lr_rule=sw["lr_rule"], reference_batch=sw["reference_batch"],
                            metric=run["metric"], max_steps=run["max_steps"], workers=sw["workers"])
        out_dir = cfg["output_dir"]
    write_snapshot(cfg, out_dir)
    emit_csv(sweep, os.path.join(out_dir, "batch_sweep.csv"))
    try:
        model = fit_complexity_model(sweep, epsilon)
        fitted = 2.0 * model.Y / model.epsilon
    except FitError as exc:
        model, fitted = None, math.nan
        print(f"fit skipped: {exc}", file=sys.stderr)
    emit_svg_plot(sweep_plot(sweep, model, title="SFO vs batch", which="sfo"), os.path.join(out_dir, "sfo.svg"))
    emit_svg_plot(sweep_plot(sweep, model, title="steps vs batch", which="steps"), os.path.join(out_dir, "steps.svg"))
    empirical = sweep.empirical_critical_batch
    _say(command="sweep-batch", target=target, empirical_cbs=empirical if empirical is not None else "none",
         fitted_cbs=fitted, X=model.X if model else math.nan, Y=model.Y if model else math.nan)
    return EXIT_OK


def cmd_sweep_beta(args):
    if args.preset:
        result = protocols.run_beta_trend(workers=args.workers)
        cfg = {"preset": "beta_trend"}
        out_dir = args.out or "out"
    else:
        cfg = _config(args, _flag_overrides(args, _RUN_FLAGS))
        run, sw, o = cfg["run"], cfg["sweep"], cfg["optimizer"]
        if run["target"] is None:
            raise ValueError("sweep-beta needs run.target")
        result = beta_sweep(build_problem(cfg), sw["beta_grid"], sw["variants"], sw["batch_grid"],
                            float(run["target"]), run["seeds"], eta=float(o["eta"]), lam=float(o["lam"]),
                            lr_rule=sw["lr_rule"], reference_batch=sw["reference_batch"],
                            metric=run["metric"], max_steps=run["max_steps"], epsilon=sw["epsilon"],
                            workers=sw["workers"])
        out_dir = cfg["output_dir"]
    write_snapshot(cfg, out_dir)
    emit_csv(result, os.path.join(out_dir, "beta_sweep.csv"))
    for row in result.rows:
        _say(variant=row.variant.value, beta=row.beta,
             empirical_cbs=row.empirical_cbs if row.empirical_cbs is not None else "none",
             predicted_cbs=row.predicted_cbs)
    for msg in result.messages:
        print(f"trend warning: {msg}", file=sys.stderr)
    _say(command="sweep-beta", trend_ok="yes" if all(result.trend_ok.values()) else "no")
    return EXIT_OK


def cmd_predict_cbs(args):
    for v in Variant:
        value = critical_batch_muon(args.sigma2, args.epsilon, v, args.beta, args.lam)
        print(f"{v.value} {value:g}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="muonlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="dotted override, e.g. optimizer.eta=0.05 (repeatable)")
    common.add_argument("--out", help="output directory (overrides output_dir)")

    run_flags = _Parser(add_help=False)
    run_flags.add_argument("--variant", choices=[v.value for v in Variant])
    run_flags.add_argument("--eta", type=float)
    run_flags.add_argument("--beta", type=float)
    run_flags.add_argument("--lambda", dest="lam", type=float)
    run_flags.add_argument("--orth", choices=["exact_svd", "newton_schulz5"])
    run_flags.add_argument("--batch", type=int)
    run_flags.add_argument("--steps", type=int)

    p = sub.add_parser("orthcheck", help="compare NS5 with the exact polar factor")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ns-steps", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_orthcheck)

    p = sub.add_parser("train", parents=[common, run_flags], help="one training run")
    p.add_argument("--seed", type=int)
    p.add_argument("--assert-bounds", action="store_true",
                   help="check the parameter and gradient norm bounds at every step")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify-bounds", parents=[common, run_flags],
                       help="norm bounds and convergence bound over the configured seeds")
    p.set_defaults(func=cmd_verify_bounds)

    for name, func, helptext in (
        ("sweep-eta", cmd_sweep_eta, "learning-rate sweep across 1/lambda"),
        ("sweep-batch", cmd_sweep_batch, "steps and SFO versus batch size, with model fit"),
        ("sweep-beta", cmd_sweep_beta, "empirical critical batch versus momentum"),
    ):
        p = sub.add_parser(name, parents=[common, run_flags], help=helptext)
        p.add_argument("--preset", action="store_true", help="run the built-in NoisyQuadratic protocol")
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("predict-cbs", help="closed-form critical batch sizes for all four variants")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=cmd_predict_cbs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BoundViolation as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MuonlabError, ValueError, TypeError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
