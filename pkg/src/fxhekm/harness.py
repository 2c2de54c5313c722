"""Seeded Monte Carlo execution, result reduction and file output."""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis
from .algorithms import FXHEKM, ControllerState, hekm_objective, make_rule, run_controller
from .config import ExperimentConfig, format_config
from .errors import ConfigurationError, TheoryError
from .metrics import MetricSeries, anr_curves, ensemble_anr, ensemble_mse, exceeds, plateau
from .noise import sample_alpha_stable
from .paths import PlantState, identify_secondary, load_taps, normalized_misalignment, save_taps

log = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("p", "alpha", "eta", "zeta", "rho", "snr_db", "alpha_s", "mu")
HEKM_SWEEP = ("p", "alpha", "eta", "zeta", "rho")
UNSTABLE_AFTER = 500
STREAM_REFERENCE, STREAM_MEASUREMENT, STREAM_IDENTIFICATION = 0, 1, 2


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    algorithms: list
    mse: dict
    anr: dict
    summary: dict
    trials: dict
    theory: dict | None
    identification: dict
    snr: dict
    secondary_estimate: np.ndarray
    wall_clock_s: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def n_iters(self) -> int:
        return self.config.n_iters


# ---------------------------------------------------------------------------
# Noise streams and identification
# ---------------------------------------------------------------------------


def trial_streams(config: ExperimentConfig, trial: int):
    """Reference noise x(n), measurement noise v(n) and sigma_v of one trial."""
    seed = config.trial_seed(trial)
    spec = replace(config.noise, seed=seed)
    x = sample_alpha_stable(spec, config.n_iters, np.random.default_rng([seed, STREAM_REFERENCE]))
    clean = np.convolve(np.asarray(config.primary_taps), x)[: config.n_iters]
    ref = clean if config.snr_reference == "desired" else x
    power = float(np.mean(ref * ref))
    if config.snr_db is None:
        sigma_v = config.noise_fraction * math.sqrt(float(np.mean(clean * clean)))
    else:
        sigma_v = math.sqrt(power / 10.0 ** (config.snr_db / 10.0))
    v = np.random.default_rng([seed, STREAM_MEASUREMENT]).standard_normal(config.n_iters) * sigma_v
    return x, v, sigma_v, float(np.mean(clean * clean))


def secondary_estimate(config: ExperimentConfig):
    """Load the persisted estimate or identify it; returns ``(taps, info)``."""
    truth = np.asarray(config.secondary_taps)
    if config.secondary_estimate_file:
        taps = load_taps(config.secondary_estimate_file)
        return taps, {"source": config.secondary_estimate_file,
                      "misalignment": normalized_misalignment(taps, truth)}
    ident = config.identification
    probe = None
    if ident.probe == "scenario":
        probe = replace(config.noise, scale=1.0, delta=0.0)
    est, trace = identify_secondary(
        truth, ident.probe_len, ident.mu, ident.model_len,
        seed=[config.seed_base, STREAM_IDENTIFICATION], probe=probe,
    )
    tail = trace[-max(1, len(trace) // 10):]
    return est.impulse_response, {
        "source": "identified",
        "misalignment": normalized_misalignment(est, truth),
        "final_error_rms": float(np.sqrt(np.mean(tail * tail))),
        "error_trace": trace,
    }


# ---------------------------------------------------------------------------
# Per-trial simulation (worker side)
# ---------------------------------------------------------------------------


def simulate_trials(config: ExperimentConfig, s_hat, kind: str, params: dict, trials) -> dict:
    """Run one algorithm on a batch of trials; rows follow ``trials`` order."""
    trials = list(trials)
    streams = [trial_streams(config, t) for t in trials]
    x = np.stack([s[0] for s in streams])
    v = np.stack([s[1] for s in streams])
    batch = len(trials)
    rule = make_rule(kind, **params)
    plant = PlantState(config.primary_taps, config.secondary_taps, s_hat, batch=batch)
    ctrl = ControllerState(rule, config.L, batch=batch)
    tr = run_controller(plant, ctrl, x, config.n_iters, v)
    anr = anr_curves(tr.e, tr.d, config.theta)
    out = {
        "e": tr.e,
        "anr": anr,
        "diverged": tr.diverged,
        "diverged_at": tr.diverged_at,
        "sigma_v": np.array([s[2] for s in streams]),
        "clean_power": np.array([s[3] for s in streams]),
        "measurement_power": np.mean(v * v, axis=1),
    }
    if isinstance(rule, FXHEKM):
        out.update(_theory_statistics(config, rule, tr))
    return out


def _theory_statistics(config: ExperimentConfig, rule: FXHEKM, tr) -> dict:
    n = config.n_iters
    start = n - max(config.L, int(round(config.theory_tail_fraction * n)))
    covs, gains, signed = [], [], []
    for row in range(tr.e.shape[0]):
        vecs = analysis.reference_vectors(tr.x_filtered[row], config.L, start)
        covs.append(vecs.T @ vecs / len(vecs))
        e, r = tr.e[row, start:], tr.ref_norm_sq[row, start:]
        gains.append(analysis.estimate_phi_gain(e, r, rule.params))
        signed.append(analysis.estimate_phi_bar(e, r, rule.params))
    return {"cov": np.stack(covs), "phi_gain": np.array(gains), "phi_signed": np.array(signed)}


def _chunks(n_trials: int, workers: int):
    bounds = np.linspace(0, n_trials, min(workers, n_trials) + 1).astype(int)
    return [list(range(a, b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _gather(parts: list) -> dict:
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _simulate_task(args):
    return simulate_trials(*args)


# ---------------------------------------------------------------------------
# Experiment driver
# ---------------------------------------------------------------------------


def run_experiment(config: ExperimentConfig, executor=None) -> ExperimentResult:
    """Identify S_hat, run every algorithm over all trials, reduce to ensemble metrics."""
    if not config.algorithms:
        raise ConfigurationError("no algorithms configured")
    t0 = time.perf_counter()
    s_hat, ident = secondary_estimate(config)
    log.info("secondary path misalignment %.3e", ident["misalignment"])

    chunks = _chunks(config.n_trials, config.workers)
    own_pool = None
    if executor is None and config.workers > 1 and len(chunks) > 1:
        executor = own_pool = ProcessPoolExecutor(max_workers=config.workers)
    try:
        mse, anr, summary, trials = {}, {}, {}, {}
        theory = None
        snr = None
        for kind, params in config.algorithms:
            tasks = [(config, s_hat, kind, params, c) for c in chunks]
            parts = list(executor.map(_simulate_task, tasks)) if executor else [_simulate_task(t) for t in tasks]
            data = _gather(parts)
            mse[kind] = ensemble_mse(data["e"], name=kind)
            anr[kind] = ensemble_anr(data["anr"], name=kind)
            per_trial_plateau = plateau(data["anr"], config.plateau_fraction)
            unstable = exceeds(data["anr"], 0.0, after=UNSTABLE_AFTER)
            trials[kind] = {
                "anr_plateau_db": np.atleast_1d(per_trial_plateau),
                "diverged": data["diverged"].astype(bool),
                "diverged_at": data["diverged_at"],
                "unstable": unstable,
            }
            summary[kind] = {
                "anr_plateau_db": anr[kind].plateau(config.plateau_fraction),
                "mse_plateau_db": mse[kind].plateau(config.plateau_fraction),
                "diverged_trials": int(data["diverged"].sum()),
                "unstable_trials": int(unstable.sum()),
                "positive_plateau_trials": int(np.sum(np.atleast_1d(per_trial_plateau) > 0)),
            }
            if snr is None:
                realized = 10.0 * np.log10(np.mean(data["clean_power"]) / np.mean(data["measurement_power"]))
                snr = {
                    "target_db": config.snr_db,
                    "realized_db": float(realized),
                    "sigma_v_mean": float(np.mean(data["sigma_v"])),
                    "j_min": float(np.mean(data["sigma_v"] ** 2)),
                }
            if "cov" in data:
                rule = make_rule(kind, **params)
                lam = analysis.covariance_eigenvalues(np.mean(data["cov"], axis=0))
                inputs = analysis.TheoryInputs(lam, float(np.mean(data["phi_gain"])), rule.mu, snr["j_min"])
                extra = {
                    "phi_signed": float(np.mean(data["phi_signed"])),
                    "simulated_mse_plateau_db": summary[kind]["mse_plateau_db"],
                }
                try:
                    theory = analysis.theory_report(inputs, **extra)
                except TheoryError as exc:
                    # measured inputs outside the analysed regime: keep them, note why
                    theory = {"phi": inputs.phi_bar, "lambda_max": inputs.lambda_max, "mu": inputs.mu,
                              "j_min": inputs.j_min, **extra, "theory_error": str(exc)}
                theory["eigenvalues"] = lam
    finally:
        if own_pool is not None:
            own_pool.shutdown()

    return ExperimentResult(
        config=config,
        algorithms=config.algorithm_names,
        mse=mse,
        anr=anr,
        summary=summary,
        trials=trials,
        theory=theory,
        identification=ident,
        snr=snr,
        secondary_estimate=np.asarray(s_hat),
        wall_clock_s=time.perf_counter() - t0,
    )


def run_trial(config: ExperimentConfig, trial: int, kind: str | None = None) -> dict:
    """Re-run a single trial in isolation (uses the same identification as the ensemble)."""
    s_hat, _ = secondary_estimate(config)
    kinds = [kind.upper()] if kind else config.algorithm_names
    params = dict(config.algorithms)
    return {k: simulate_trials(config, s_hat, k, params[k], [trial]) for k in kinds}


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------


def _apply(config: ExperimentConfig, parameter: str, value) -> ExperimentConfig:
    if parameter == "snr_db":
        return replace(config, snr_db=None if value is None else float(value))
    if parameter == "alpha_s":
        return replace(config, noise=replace(config.noise, alpha_s=float(value)))
    if parameter in HEKM_SWEEP:
        if "FXHEKM" not in config.algorithm_names:
            raise ConfigurationError(f"sweeping {parameter} requires an FXHEKM algorithm")
        return config.with_params("FXHEKM", **{parameter: float(value)})
    if parameter == "mu":
        algos = []
        for kind, params in config.algorithms:
            rule = make_rule(kind, **params)
            params = dict(params)
            if kind == "FXHEKM":
                params["rho"] = float(value) / (rule.eta * rule.p)
            elif kind == "FXGHT":
                params["rho"] = float(value)
            else:
                params["mu"] = float(value)
            algos.append((kind, params))
        return replace(config, algorithms=tuple(algos))
    raise ConfigurationError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")


def objective_curves(config: ExperimentConfig, parameter: str, values, grid=None) -> dict:
    """Objective ``J(e)`` and derivative ``dJ/de`` over an error grid for each value."""
    grid = np.linspace(-5.0, 5.0, 201) if grid is None else np.asarray(grid, dtype=np.float64)
    base = dict(config.algorithms).get("FXHEKM", {})
    curves = {"e": grid}
    for value in values:
        rule = make_rule("FXHEKM", **{**base, parameter: float(value)})
        params = rule.params
        curves[f"J_{parameter}={value}"] = hekm_objective(grid, params)
        curves[f"dJ_{parameter}={value}"] = rule.mu * rule.score(grid)
    return curves


@dataclass
class SweepResult:
    parameter: str
    values: list
    results: list
    curves: dict | None = None


def sweep(config: ExperimentConfig, parameter: str, values, write: bool = False) -> SweepResult:
    """One experiment per value; ``p``/``alpha`` sweeps also produce objective curves."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigurationError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")
    values = list(values)
    if not values:
        return SweepResult(parameter, [], [])
    configs = [_apply(config, parameter, v) for v in values]
    base_out = Path(config.output_dir) / f"sweep_{parameter}"
    results = []
    for v, cfg in zip(values, configs):
        cfg = replace(cfg, output_dir=str(base_out / f"{parameter}={v}"))
        res = run_experiment(cfg)
        if write:
            emit_csv(res, cfg.output_dir)
        results.append(res)
    curves = objective_curves(config, parameter, values) if parameter in ("p", "alpha") else None
    if write and curves is not None:
        _write_columns(base_out / "objective_curves.csv", curves)
    return SweepResult(parameter, values, results, curves)


# ---------------------------------------------------------------------------
# Stability experiment
# ---------------------------------------------------------------------------


def stability_experiment(config: ExperimentConfig, factors=(0.5, 20.0), trial: int = 0,
                         n_iters: int | None = None) -> dict:
    """Run FXHEKM on one frozen realization at multiples of the measured ``mu_hi``.

    ``lambda_max`` and ``Phi`` come from a nominal-parameter run on the same
    realization (steady-state tail), as in :func:`run_experiment`.
    """
    if "FXHEKM" not in config.algorithm_names:
        raise ConfigurationError("stability experiment requires an FXHEKM algorithm")
    cfg = replace(config, n_iters=n_iters or config.n_iters)
    s_hat, _ = secondary_estimate(cfg)
    params = dict(cfg.algorithms)["FXHEKM"]
    nominal = simulate_trials(cfg, s_hat, "FXHEKM", params, [trial])
    lam = analysis.covariance_eigenvalues(nominal["cov"][0])
    rule = make_rule("FXHEKM", **params)
    inputs = analysis.TheoryInputs(lam, float(nominal["phi_gain"][0]), rule.mu, float(nominal["sigma_v"][0] ** 2))
    _, mu_hi = analysis.stability_bound(inputs)
    runs = {}
    for f in factors:
        mu = f * mu_hi
        p = {**params, "rho": mu / (rule.eta * rule.p)}
        x, v, _, _ = trial_streams(cfg, trial)
        plant = PlantState(cfg.primary_taps, cfg.secondary_taps, s_hat)
        ctrl = ControllerState(make_rule("FXHEKM", **p), cfg.L)
        tr = run_controller(plant, ctrl, x, cfg.n_iters, v)
        runs[f] = {
            "mu": mu,
            "diverged": bool(tr.diverged),
            "diverged_at": int(tr.diverged_at),
            "max_weight_norm": float(np.max(tr.w_norm)),
            "max_abs_weight": float(np.max(np.abs(ctrl.weights))),
        }
    return {"lambda_max": inputs.lambda_max, "phi": inputs.phi_bar, "mu_hi": mu_hi, "runs": runs}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def _write_columns(path: Path, columns: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(columns[k] for k in names)):
            w.writerow([_fmt(v) for v in row])


def write_metric_csv(path, series: dict) -> None:
    """``iteration,<algo1>,<algo2>,...`` with 1-based iterations; absent values empty."""
    path = Path(path)
    names = list(series)
    n = series[names[0]].iterations if names else 0
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", *names])
            cols = [series[k].values_db for k in names]
            for i in range(n):
                w.writerow([i + 1, *(_fmt(c[i]) for c in cols)])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_metric_csv(path) -> dict:
    """Parse a metric CSV back into ``{algorithm: MetricSeries}``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    data = {k: np.array([float(r[i + 1]) if r[i + 1] else np.nan for r in rows[1:]]) for i, k in enumerate(names)}
    return {k: MetricSeries(k, v) for k, v in data.items()}


def _kv_lines(d: dict) -> str:
    lines = []
    for k, v in d.items():
        if isinstance(v, np.ndarray):
            v = " ".join(repr(float(x)) for x in v)
        elif isinstance(v, (float, np.floating)):
            v = repr(float(v))
        elif isinstance(v, np.integer):
            v = int(v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def read_kv(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line and not line.lstrip().startswith("#"):
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


GNUPLOT = """set datafile separator ','
set key autotitle columnhead
set xlabel 'iteration'
set ylabel 'dB'
set term pngcairo size 900,600
set output 'anr.png'
plot for [i=2:{ncol}] 'anr.csv' using 1:i with lines
set output 'mse.png'
plot for [i=2:{ncol}] 'mse.csv' using 1:i with lines
"""


def emit_csv(result: ExperimentResult, output_dir) -> list:
    """Write metric CSVs, summaries, theory report, manifest, S_hat taps and a gnuplot script."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []

    def path(name):
        p = out / name
        written.append(p)
        return p

    write_metric_csv(path("mse.csv"), result.mse)
    write_metric_csv(path("anr.csv"), result.anr)

    with open(path("summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        keys = ["anr_plateau_db", "mse_plateau_db", "diverged_trials", "unstable_trials", "positive_plateau_trials"]
        w.writerow(["algorithm", *keys])
        for k in result.algorithms:
            s = result.summary[k]
            w.writerow([k, *(_fmt(s[c]) if isinstance(s[c], float) else s[c] for c in keys)])

    with open(path("trials.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "seed", *(f"{k}_{c}" for k in result.algorithms for c in ("anr_plateau_db", "diverged", "unstable"))])
        for t in range(result.config.n_trials):
            row = [t, result.config.trial_seed(t)]
            for k in result.algorithms:
                tr = result.trials[k]
                row += [_fmt(tr["anr_plateau_db"][t]), int(tr["diverged"][t]), int(tr["unstable"][t])]
            w.writerow(row)

    theory = dict(result.theory or {})
    theory_text = "# FXHEKM theory report\n" + (_kv_lines(theory) if theory else "available = false\n")
    path("theory.txt").write_text(theory_text)

    cfg = result.config
    manifest = [
        "# resolved configuration",
        format_config(cfg),
        "# seeds",
        f"seed_derivation = trial_seed = seed_base XOR trial; streams [trial_seed, {STREAM_REFERENCE}] reference, "
        f"[trial_seed, {STREAM_MEASUREMENT}] measurement; identification [seed_base, {STREAM_IDENTIFICATION}]",
        "trial_seeds = " + " ".join(str(cfg.trial_seed(t)) for t in range(cfg.n_trials)),
        "# derived",
    ]
    derived = {f"{k}_step_size": make_rule(k, **p).step_size for k, p in cfg.algorithms}
    derived.update({f"snr_{k}": v for k, v in (result.snr or {}).items()})
    derived.update({f"identification_{k}": v for k, v in result.identification.items() if k != "error_trace"})
    manifest.append(_kv_lines(derived))
    path("manifest.txt").write_text("\n".join(manifest))

    save_taps(path("secondary_estimate.txt"), result.secondary_estimate)
    path("plot.gp").write_text(GNUPLOT.format(ncol=len(result.algorithms) + 1))
    (out / "timing.txt").write_text(f"wall_clock_s = {result.wall_clock_s!r}\n")
    return written


def theory_comparison(result_dir) -> dict:
    """Compare the stored J(inf) with the simulated FXHEKM MSE plateau of a result directory."""
    d = Path(result_dir)
    theory = read_kv(d / "theory.txt")
    if "j_inf_db" not in theory:
        raise ConfigurationError(f"{d} holds no FXHEKM theory report")
    mse = read_metric_csv(d / "mse.csv")
    frac = float(read_kv(d / "manifest.txt").get("plateau_fraction", 0.1))
    sim = mse["FXHEKM"].plateau(frac)
    j_inf_db = float(theory["j_inf_db"])
    return {
        "j_inf_db": j_inf_db,
        "j_min_db": float(theory["j_min_db"]),
        "simulated_mse_plateau_db": sim,
        "difference_db": sim - j_inf_db,
        "mu_hi": float(theory["mu_hi"]),
        "phi": float(theory["phi"]),
        "lambda_max": float(theory["lambda_max"]),
    }
