"""Primary/secondary acoustic paths, plant stepping and secondary-path identification."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IdentificationError
from .noise import NoiseSpec, sample_alpha_stable
from .signal import DelayLine, FIRStream, as_taps, push_and_dot

# P(z) = 0.25 z^-2 + 0.5 z^-3 + 1.0 z^-4 + 0.5 z^-5 + 0.25 z^-6 and S(z) = 0.5 P(z)
PRIMARY_TAPS = np.array([0.0, 0.0, 0.25, 0.5, 1.0, 0.5, 0.25])
SECONDARY_TAPS = 0.5 * PRIMARY_TAPS

DIVERGENCE_LIMIT = 1e6


@dataclass
class PathModel:
    impulse_response: np.ndarray

    def __post_init__(self):
        self.impulse_response = as_taps(self.impulse_response, "impulse_response")

    def __len__(self):
        return self.impulse_response.size

    def stream(self, batch: int | None = None) -> FIRStream:
        return FIRStream(self.impulse_response, batch)


class PlantState:
    """Streaming state of the acoustic plant seen by one (or a batch of) controller(s).

    The reference filter always uses ``secondary_estimate``; the true
    ``secondary`` path only shapes the anti-noise reaching the error sensor.
    """

    def __init__(self, primary, secondary, secondary_estimate=None, batch: int | None = None):
        self.primary = _as_path(primary)
        self.secondary = _as_path(secondary)
        self.secondary_estimate = _as_path(
            self.secondary.impulse_response if secondary_estimate is None else secondary_estimate
        )
        self.batch = batch
        self.primary_filter = self.primary.stream(batch)
        self.secondary_filter = self.secondary.stream(batch)
        self.reference_filter = self.secondary_estimate.stream(batch)

    def reset(self) -> None:
        for f in (self.primary_filter, self.secondary_filter, self.reference_filter):
            f.reset()


def _as_path(p) -> PathModel:
    return p if isinstance(p, PathModel) else PathModel(p)


def step_plant(plant: PlantState, x, v, y):
    """Advance the plant one sample.

    Returns ``(d, e, x_filtered)`` with ``d = (p*x)(n) + v``,
    ``e = d - (s*y)(n)`` and ``x_filtered = (s_hat*x)(n)``.
    """
    d = plant.primary_filter.step(x) + v
    e = d - plant.secondary_filter.step(y)
    xf = plant.reference_filter.step(x)
    return d, e, xf


def normalized_misalignment(estimate, truth) -> float:
    """``||est - truth||^2 / ||truth||^2`` after zero-padding to a common length."""
    a = np.asarray(getattr(estimate, "impulse_response", estimate), dtype=np.float64)
    b = np.asarray(getattr(truth, "impulse_response", truth), dtype=np.float64)
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    return float(np.sum((a - b) ** 2) / np.sum(b**2))


def identify_secondary(
    secondary,
    probe_len: int = 20000,
    mu_id: float = 0.01,
    model_len: int | None = None,
    seed=0,
    probe: NoiseSpec | None = None,
):
    """Offline LMS identification of the secondary path.

    The probe is unit-variance white Gaussian noise unless ``probe`` gives an
    alpha-stable spec. Returns ``(estimate, error_trace)``.
    """
    secondary = _as_path(secondary)
    model_len = len(secondary) if model_len is None else int(model_len)
    if mu_id <= 0:
        raise ConfigurationError("mu_id must be positive")
    if model_len < len(secondary):
        raise ConfigurationError(
            f"model_len {model_len} shorter than the secondary path ({len(secondary)})"
        )
    if probe_len < 1:
        raise ConfigurationError("probe_len must be >= 1")

    rng = np.random.default_rng(seed)
    if probe is None:
        u = rng.standard_normal(probe_len)
    else:
        u = sample_alpha_stable(probe, probe_len, rng)

    target = secondary.stream()
    line = DelayLine(model_len)
    w = np.zeros(model_len)
    trace = np.empty(probe_len)
    for n in range(probe_len):
        t = target.step(u[n])
        err = t - push_and_dot(line, u[n], w)
        if not np.isfinite(err) or abs(err) > DIVERGENCE_LIMIT:
            raise IdentificationError(
                f"secondary-path identification diverged at sample {n} (mu_id={mu_id})"
            )
        w += mu_id * err * line.buffer
        trace[n] = err
    return PathModel(w), trace


def save_taps(path, taps) -> None:
    """Write one coefficient per line, with round-trip precision."""
    taps = np.asarray(getattr(taps, "impulse_response", taps), dtype=np.float64)
    try:
        with open(path, "w") as fh:
            fh.writelines(f"{float(c)!r}\n" for c in taps)
    except OSError as exc:
        raise OSError(f"cannot write taps to {os.fspath(path)}: {exc}") from exc


def load_taps(path) -> np.ndarray:
    with open(path) as fh:
        values = [float(line) for line in fh if line.strip()]
    return as_taps(values, os.fspath(path))
