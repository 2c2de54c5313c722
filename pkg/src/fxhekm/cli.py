"""Command line entry point: ``fxhekm run|sweep|identify|complexity|theory|stability``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import analysis, harness
from .config import load_config
from .errors import FxhekmError
from .paths import save_taps


def _overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seed_base"] = args.seed
    if args.trials is not None:
        changes["n_trials"] = args.trials
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.workers is not None:
        changes["workers"] = args.workers
    if getattr(args, "iters", None) is not None:
        changes["n_iters"] = args.iters
    return cfg.evolve(**changes) if changes else cfg


def _values(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def cmd_run(args) -> int:
    cfg = _overrides(load_config(args.config), args)
    res = harness.run_experiment(cfg)
    harness.emit_csv(res, cfg.output_dir)
    print(f"{'algorithm':<10} {'ANR plateau dB':>15} {'MSE plateau dB':>15} {'diverged':>9} {'unstable':>9}")
    for k in res.algorithms:
        s = res.summary[k]
        print(f"{k:<10} {s['anr_plateau_db']:>15.2f} {s['mse_plateau_db']:>15.2f} "
              f"{s['diverged_trials']:>9d} {s['unstable_trials']:>9d}")
    if res.theory:
        print(f"theory: J(inf) {res.theory['j_inf_db']:.2f} dB, mu_hi {res.theory['mu_hi']:.4g}")
    print(f"wrote {cfg.output_dir} in {res.wall_clock_s:.1f} s")
    return 0


def cmd_sweep(args) -> int:
    cfg = _overrides(load_config(args.config), args)
    out = harness.sweep(cfg, args.param, _values(args.values), write=True)
    for v, res in zip(out.values, out.results):
        cells = " ".join(f"{k}={res.summary[k]['anr_plateau_db']:.2f}" for k in res.algorithms)
        print(f"{args.param}={v}: {cells}")
    return 0


def cmd_identify(args) -> int:
    cfg = _overrides(load_config(args.config), args)
    taps, info = harness.secondary_estimate(replace(cfg, secondary_estimate_file=None))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_taps(out / "secondary_estimate.txt", taps)
    print(f"misalignment {info['misalignment']:.3e}")
    print(f"wrote {out / 'secondary_estimate.txt'}")
    return 0


def cmd_complexity(args) -> int:
    kinds = args.kind or list(analysis.TABLE_ROWS)
    print(f"{'algorithm':<10} {'mult':>6} {'div':>6} {'add':>6}  nonlinear")
    for k in kinds:
        c = analysis.complexity_count(k, args.L, args.M, args.p)
        print(f"{k:<10} {c.mults:>6d} {c.divs:>6d} {c.adds:>6d}  {c.nonlinear}")
    return 0


def cmd_theory(args) -> int:
    cmp = harness.theory_comparison(args.result_dir)
    for k, v in cmp.items():
        print(f"{k} = {v!r}")
    return 0


def cmd_stability(args) -> int:
    cfg = _overrides(load_config(args.config), args)
    rep = harness.stability_experiment(cfg, _values(args.factors), trial=args.trial)
    print(f"lambda_max {rep['lambda_max']:.4g}  Phi {rep['phi']:.4g}  mu_hi {rep['mu_hi']:.4g}")
    for f, r in rep["runs"].items():
        print(f"{f:g} x mu_hi: diverged={r['diverged']} max|w|={r['max_abs_weight']:.3g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fxhekm", description="Robust filtered-x ANC experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def experiment(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="config file or preset name (scenario1, scenario2, impulsive_sweep)")
        p.add_argument("--seed", type=int, help="override seed_base")
        p.add_argument("--trials", type=int, help="override n_trials")
        p.add_argument("--iters", type=int, help="override n_iters")
        p.add_argument("--out", help="override output_dir")
        p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
        p.set_defaults(fn=fn)
        return p

    experiment("run", cmd_run, "run a Monte Carlo experiment and write CSVs")
    sw = experiment("sweep", cmd_sweep, "one experiment per parameter value")
    sw.add_argument("--param", required=True, choices=harness.SWEEP_PARAMETERS)
    sw.add_argument("--values", required=True, help="comma or space separated values")
    experiment("identify", cmd_identify, "identify the secondary path and save its taps")
    st = experiment("stability", cmd_stability, "FXHEKM at multiples of the measured mu_hi")
    st.add_argument("--factors", default="0.5,20")
    st.add_argument("--trial", type=int, default=0)

    cx = sub.add_parser("complexity", help="per-iteration operation counts")
    cx.add_argument("--L", type=int, required=True)
    cx.add_argument("--M", type=int, required=True)
    cx.add_argument("--p", type=int, default=2)
    cx.add_argument("--kind", action="append", help="restrict to one algorithm (repeatable)")
    cx.set_defaults(fn=cmd_complexity)

    th = sub.add_parser("theory", help="compare theory with the simulated MSE of a result directory")
    th.add_argument("result_dir")
    th.set_defaults(fn=cmd_theory)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except (FxhekmError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
