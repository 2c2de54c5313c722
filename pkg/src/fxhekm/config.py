"""Experiment configuration: INI-style text files with units in key names.

Example::

    [experiment]
    scenario = scenario1
    n_iters = 10000
    n_trials = 250
    filter_length = 16
    seed_base = 2024
    snr_db = 20

    [noise]
    alpha_s = 2.0
    scale = 0.1

    [algorithm:FXHEKM]
    rho = 0.1
    eta = 1.0

Algorithm sections keep their file order, which is also the CSV column order.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .algorithms import make_rule
from .errors import ConfigurationError
from .noise import NoiseSpec
from .paths import PRIMARY_TAPS, SECONDARY_TAPS

PRESETS = ("scenario1", "scenario2", "impulsive_sweep")
SNR_REFERENCES = ("desired", "reference")
PROBES = ("gaussian", "scenario")


@dataclass(frozen=True)
class Identification:
    probe_len: int = 20000
    mu: float = 0.01
    model_len: int | None = None
    probe: str = "gaussian"

    def __post_init__(self):
        if self.probe not in PROBES:
            raise ConfigurationError(f"identification probe must be one of {PROBES}")
        if self.probe_len < 1 or self.mu <= 0:
            raise ConfigurationError("identification needs probe_len >= 1 and mu > 0")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "custom"
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(scale=0.1))
    snr_db: float | None = 20.0
    snr_reference: str = "desired"
    L: int = 16
    n_iters: int = 10000
    n_trials: int = 250
    algorithms: tuple = ()
    primary_taps: tuple = tuple(PRIMARY_TAPS)
    secondary_taps: tuple = tuple(SECONDARY_TAPS)
    identification: Identification = field(default_factory=Identification)
    secondary_estimate_file: str | None = None
    seed_base: int = 2024
    output_dir: str = "results"
    workers: int = 1
    theta: float = 0.99
    plateau_fraction: float = 0.1
    theory_tail_fraction: float = 0.25
    noise_fraction: float = 0.01

    def __post_init__(self):
        if self.n_trials < 1 or self.L < 1 or self.n_iters < 1:
            raise ConfigurationError("n_trials, L and n_iters must all be >= 1")
        if self.seed_base < 0:
            raise ConfigurationError("seed_base must be non-negative")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.snr_reference not in SNR_REFERENCES:
            raise ConfigurationError(f"snr_reference must be one of {SNR_REFERENCES}")
        algos = tuple((str(k), dict(p)) for k, p in self.algorithms)
        names = [make_rule(k, **p).name for k, p in algos]
        if len(set(names)) != len(names):
            raise ConfigurationError("each algorithm may appear only once")
        object.__setattr__(self, "algorithms", tuple(zip(names, (p for _, p in algos))))
        object.__setattr__(self, "primary_taps", tuple(float(c) for c in self.primary_taps))
        object.__setattr__(self, "secondary_taps", tuple(float(c) for c in self.secondary_taps))

    @property
    def algorithm_names(self) -> list[str]:
        return [k for k, _ in self.algorithms]

    def rules(self):
        return [make_rule(k, **p) for k, p in self.algorithms]

    def trial_seed(self, trial: int) -> int:
        """Seed of trial ``trial``: ``seed_base XOR trial``."""
        return self.seed_base ^ int(trial)

    def with_params(self, algorithm: str, **params) -> "ExperimentConfig":
        algos = []
        found = False
        for k, p in self.algorithms:
            if k == algorithm.upper():
                p = {**p, **params}
                found = True
            algos.append((k, p))
        if not found:
            raise ConfigurationError(f"{algorithm} is not configured")
        return replace(self, algorithms=tuple(algos))

    def evolve(self, **changes) -> "ExperimentConfig":
        if "noise" not in changes:
            noise_keys = {f.name for f in dataclasses.fields(NoiseSpec)}
            noise_changes = {k: changes.pop(k) for k in list(changes) if k in noise_keys}
            if noise_changes:
                changes["noise"] = replace(self.noise, **noise_changes)
        return replace(self, **changes)


def _num(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def _taps(text: str) -> tuple:
    return tuple(float(t) for t in text.replace("\n", ",").split(",") if t.strip())


def _optional(value: str):
    return None if value.strip().lower() in ("", "none", "absent") else value.strip()


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc

    ex = cp["experiment"] if cp.has_section("experiment") else {}
    kw = {}
    for key, attr, conv in (
        ("scenario", "scenario", str),
        ("n_iters", "n_iters", int),
        ("n_trials", "n_trials", int),
        ("filter_length", "L", int),
        ("seed_base", "seed_base", int),
        ("output_dir", "output_dir", str),
        ("workers", "workers", int),
        ("snr_reference", "snr_reference", str),
        ("anr_forgetting_factor", "theta", float),
        ("plateau_fraction", "plateau_fraction", float),
        ("theory_tail_fraction", "theory_tail_fraction", float),
        ("measurement_noise_fraction", "noise_fraction", float),
    ):
        if key in ex:
            try:
                kw[attr] = conv(ex[key])
            except ValueError as exc:
                raise ConfigurationError(f"[experiment] {key}: {exc}") from exc
    if "snr_db" in ex:
        v = _optional(ex["snr_db"])
        kw["snr_db"] = None if v is None else float(v)

    if cp.has_section("noise"):
        sec = cp["noise"]
        known = {"alpha_s", "beta", "gamma", "delta", "scale"}
        unknown = set(sec) - known
        if unknown:
            raise ConfigurationError(f"unknown [noise] keys: {sorted(unknown)}")
        kw["noise"] = NoiseSpec(**{k: float(v) for k, v in sec.items()})

    if cp.has_section("paths"):
        sec = cp["paths"]
        if "primary_taps" in sec:
            kw["primary_taps"] = _taps(sec["primary_taps"])
        if "secondary_taps" in sec:
            kw["secondary_taps"] = _taps(sec["secondary_taps"])
        if "secondary_estimate_file" in sec:
            kw["secondary_estimate_file"] = _optional(sec["secondary_estimate_file"])
        ident = {}
        for key, attr, conv in (
            ("identification_probe_len", "probe_len", int),
            ("identification_mu", "mu", float),
            ("identification_probe", "probe", str),
        ):
            if key in sec:
                ident[attr] = conv(sec[key])
        if "identification_model_len" in sec:
            v = _optional(sec["identification_model_len"])
            ident["model_len"] = None if v is None else int(v)
        kw["identification"] = Identification(**ident)

    algos = []
    for name in cp.sections():
        if name.lower().startswith("algorithm:"):
            kind = name.split(":", 1)[1].strip()
            algos.append((kind, {k: _num(v) for k, v in cp[name].items()}))
    kw["algorithms"] = tuple(algos)
    known_sections = {"experiment", "noise", "paths"}
    stray = [s for s in cp.sections() if s not in known_sections and not s.lower().startswith("algorithm:")]
    if stray:
        raise ConfigurationError(f"unknown config sections: {stray}")
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    """Load a config file, or a shipped preset when ``path`` names one."""
    if str(path) in PRESETS:
        return preset(str(path))
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return parse_config(resources.files("fxhekm.presets").joinpath(f"{name}.ini").read_text())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: ExperimentConfig) -> str:
    """Serialize to the config text format; ``parse_config`` inverts it."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["experiment"] = {
        "scenario": cfg.scenario,
        "n_iters": str(cfg.n_iters),
        "n_trials": str(cfg.n_trials),
        "filter_length": str(cfg.L),
        "seed_base": str(cfg.seed_base),
        "snr_db": "absent" if cfg.snr_db is None else _fmt(float(cfg.snr_db)),
        "snr_reference": cfg.snr_reference,
        "measurement_noise_fraction": _fmt(cfg.noise_fraction),
        "anr_forgetting_factor": _fmt(cfg.theta),
        "plateau_fraction": _fmt(cfg.plateau_fraction),
        "theory_tail_fraction": _fmt(cfg.theory_tail_fraction),
        "output_dir": cfg.output_dir,
        "workers": str(cfg.workers),
    }
    n = cfg.noise
    cp["noise"] = {k: _fmt(float(getattr(n, k))) for k in ("alpha_s", "beta", "gamma", "delta", "scale")}
    ident = cfg.identification
    cp["paths"] = {
        "primary_taps": ", ".join(_fmt(c) for c in cfg.primary_taps),
        "secondary_taps": ", ".join(_fmt(c) for c in cfg.secondary_taps),
        "secondary_estimate_file": cfg.secondary_estimate_file or "none",
        "identification_probe_len": str(ident.probe_len),
        "identification_mu": _fmt(ident.mu),
        "identification_model_len": "none" if ident.model_len is None else str(ident.model_len),
        "identification_probe": ident.probe,
    }
    for kind, params in cfg.algorithms:
        cp[f"algorithm:{kind}"] = {k: _fmt(v) for k, v in params.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def secondary_taps_array(cfg: ExperimentConfig) -> np.ndarray:
    return np.asarray(cfg.secondary_taps, dtype=np.float64)
