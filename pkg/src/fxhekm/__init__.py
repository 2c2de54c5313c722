"""Robust filtered-x active noise control: HEKM update, competitors, theory and harness."""
from .algorithms import (
    ALGORITHM_IDS,
    REGISTRY,
    ControllerState,
    HekmParams,
    generic_fx_update,
    hekm_objective,
    hekm_phi,
    hekm_update,
    make_rule,
    run_controller,
)
from .analysis import TheoryInputs, complexity_count, stability_bound, steady_state_mse
from .config import ExperimentConfig, load_config, parse_config, preset
from .errors import ConfigurationError, FxhekmError, IdentificationError, TheoryError
from .harness import ExperimentResult, emit_csv, run_experiment, sweep
from .metrics import MetricSeries, anr_series, ensemble_mse
from .noise import NoiseSpec, sample_alpha_stable
from .paths import PathModel, PlantState, identify_secondary

__all__ = [
    "ALGORITHM_IDS", "REGISTRY", "ControllerState", "HekmParams", "generic_fx_update",
    "hekm_objective", "hekm_phi", "hekm_update", "make_rule", "run_controller",
    "TheoryInputs", "complexity_count", "stability_bound", "steady_state_mse",
    "ExperimentConfig", "load_config", "parse_config", "preset",
    "ConfigurationError", "FxhekmError", "IdentificationError", "TheoryError",
    "ExperimentResult", "emit_csv", "run_experiment", "sweep",
    "MetricSeries", "anr_series", "ensemble_mse",
    "NoiseSpec", "sample_alpha_stable",
    "PathModel", "PlantState", "identify_secondary",
]
__version__ = "0.1.0"
