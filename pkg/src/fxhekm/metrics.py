"""Ensemble MSE and average noise reduction (ANR) curves.

Absent values (undefined logarithms) are stored as NaN and serialized as
empty CSV fields.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigurationError

ABSENT_FLOOR = 1e-30


@dataclass
class MetricSeries:
    name: str
    values_db: np.ndarray

    @property
    def iterations(self) -> int:
        return int(self.values_db.size)

    def plateau(self, fraction: float = 0.1) -> float:
        return plateau(self.values_db, fraction)

    def at(self, iteration: int) -> float:
        """Value at a 1-based iteration index."""
        return float(self.values_db[iteration - 1])


def _as_trials(traces) -> np.ndarray:
    if isinstance(traces, np.ndarray):
        arr = np.atleast_2d(traces.astype(np.float64, copy=False))
    else:
        rows = [np.asarray(t, dtype=np.float64) for t in traces]
        if not rows:
            raise ConfigurationError("at least one trial is required")
        if len({r.shape for r in rows}) != 1:
            raise ConfigurationError("all error traces must have equal length")
        arr = np.stack(rows)
    if arr.shape[0] < 1 or arr.ndim != 2:
        raise ConfigurationError("expected a (trials, iterations) collection of traces")
    return arr


def ensemble_mse(error_traces, name: str = "mse") -> MetricSeries:
    """``10*log10(mean_trials e(n)^2)``; zero power is marked absent."""
    e = _as_trials(error_traces)
    with np.errstate(over="ignore", invalid="ignore"):
        power = np.mean(e * e, axis=0)
    with np.errstate(divide="ignore"):
        db = np.where(power > 0, 10.0 * np.log10(np.where(power > 0, power, 1.0)), np.nan)
    return MetricSeries(name, db)


def smoothed_magnitude(x, theta: float) -> np.ndarray:
    """``A(n) = theta*A(n-1) + (1-theta)*|x(n)|`` with ``A(0) = 0``, over the last axis."""
    return lfilter([1.0 - theta], [1.0, -theta], np.abs(np.asarray(x, dtype=np.float64)), axis=-1)


def anr_curves(e, d, theta: float = 0.99) -> np.ndarray:
    """Per-trial ANR in dB, ``20*log10(A_e/A_d)``; NaN where undefined."""
    e = np.asarray(e, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if e.shape != d.shape:
        raise ConfigurationError("e and d traces must have equal shapes")
    if not 0.0 < theta < 1.0:
        raise ConfigurationError("theta must lie in (0, 1)")
    with np.errstate(invalid="ignore", over="ignore"):
        a_e = smoothed_magnitude(e, theta)
        a_d = smoothed_magnitude(d, theta)
        ok = (a_d >= ABSENT_FLOOR) & (a_e >= ABSENT_FLOOR)
        ratio = np.where(ok, a_e / np.where(ok, a_d, 1.0), 1.0)
        return np.where(ok, 20.0 * np.log10(ratio), np.nan)


def anr_series(e_trace, d_trace, theta: float = 0.99, name: str = "anr") -> MetricSeries:
    return MetricSeries(name, anr_curves(e_trace, d_trace, theta))


def ensemble_anr(curves, name: str = "anr") -> MetricSeries:
    """Mean over trials of per-trial ANR dB values, ignoring absent entries."""
    c = _as_trials(curves)
    present = ~np.isnan(c)
    count = present.sum(axis=0)
    total = np.where(present, c, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return MetricSeries(name, mean)


def plateau(values_db, fraction: float = 0.1) -> float:
    """Mean of the defined entries in the final ``fraction`` of a curve (last axis)."""
    v = np.asarray(values_db, dtype=np.float64)
    n = v.shape[-1]
    k = max(1, int(round(fraction * n)))
    tail = v[..., n - k :]
    with np.errstate(invalid="ignore"):
        finite = np.isfinite(tail)
        out = np.where(finite, tail, 0.0).sum(axis=-1) / np.maximum(finite.sum(axis=-1), 1)
        out = np.where(finite.any(axis=-1), out, np.nan)
    return float(out) if out.ndim == 0 else out


def exceeds(curves, level_db: float = 0.0, after: int = 0) -> np.ndarray:
    """Per-trial flag: the curve rises strictly above ``level_db`` at some 1-based iteration > ``after``."""
    c = np.atleast_2d(np.asarray(curves, dtype=np.float64))[:, after:]
    with np.errstate(invalid="ignore"):
        return np.any(c > level_db, axis=-1)
