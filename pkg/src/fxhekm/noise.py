"""Seeded alpha-stable and Gaussian noise generation.

The alpha-stable law is parameterized by its characteristic function

    phi(t) = exp{ j*delta*t - gamma*|t|**alpha_s * [1 + j*beta*sign(t)*S(t, alpha_s)] }

with ``S = tan(pi*alpha_s/2)`` for ``alpha_s != 1`` and ``S = (2/pi)*log|t|``
otherwise. ``gamma`` is the dispersion, so the scale of the standard S1
parameterization is ``gamma ** (1/alpha_s)``. For ``alpha_s = 2`` the law is
Gaussian with variance ``2*gamma``.

Draws use the Chambers-Mallows-Stuck transform of a uniform angle and a unit
exponential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class NoiseSpec:
    alpha_s: float = 2.0
    beta: float = 0.0
    gamma: float = 1.0
    delta: float = 0.0
    scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha_s <= 2.0:
            raise ConfigurationError(f"alpha_s must lie in (0, 2], got {self.alpha_s}")
        if not -1.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.gamma > 0.0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if not self.scale >= 0.0:
            raise ConfigurationError(f"scale must be non-negative, got {self.scale}")
        if not math.isfinite(self.delta):
            raise ConfigurationError("delta must be finite")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def standard_stable(rng: np.random.Generator, alpha_s: float, beta: float, n: int) -> np.ndarray:
    """Unit-scale, zero-location stable variates (S1 parameterization).

    The skew sign follows the characteristic function in the module
    docstring, which for ``alpha_s != 1`` is the mirror image of the usual S1
    convention; hence the internal ``-beta``.
    """
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size=n)
    w = rng.exponential(1.0, size=n)
    if alpha_s == 1.0:
        half_pi = 0.5 * math.pi
        bv = half_pi + beta * v
        return (bv * np.tan(v) - beta * np.log(half_pi * w * np.cos(v) / bv)) / half_pi

    b = -beta
    tan_term = b * math.tan(0.5 * math.pi * alpha_s)
    shift = math.atan(tan_term) / alpha_s
    amp = (1.0 + tan_term * tan_term) ** (0.5 / alpha_s)
    arg = alpha_s * (v + shift)
    return (
        amp
        * np.sin(arg)
        / np.cos(v) ** (1.0 / alpha_s)
        * (np.cos(v - arg) / w) ** ((1.0 - alpha_s) / alpha_s)
    )


def sample_alpha_stable(spec: NoiseSpec, n: int, rng=None) -> np.ndarray:
    """Draw ``n`` i.i.d. samples of ``spec``, multiplied by ``spec.scale``.

    ``rng`` overrides ``spec.seed`` when given (a Generator, an int, or any
    seed accepted by :func:`numpy.random.default_rng`).
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    gen = _rng(spec.seed if rng is None else rng)
    x = standard_stable(gen, spec.alpha_s, spec.beta, int(n))
    sigma = spec.gamma ** (1.0 / spec.alpha_s)
    if spec.alpha_s == 1.0:
        x = sigma * x + (2.0 / math.pi) * spec.beta * sigma * math.log(sigma)
    else:
        x = sigma * x
    return spec.scale * (x + spec.delta)


def sample_gaussian(sigma: float, n: int, seed=0) -> np.ndarray:
    """``n`` i.i.d. N(0, sigma**2) draws."""
    if sigma < 0:
        raise ConfigurationError(f"sigma must be non-negative, got {sigma}")
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    return _rng(seed).normal(0.0, 1.0, size=int(n)) * sigma


def stable_cf(t, alpha_s: float, beta: float = 0.0, gamma: float = 1.0, delta: float = 0.0):
    """Closed-form characteristic function of the law documented above."""
    t = np.asarray(t, dtype=np.float64)
    at = np.abs(t)
    if alpha_s == 1.0:
        with np.errstate(divide="ignore"):
            s = np.where(at > 0, (2.0 / math.pi) * np.log(np.where(at > 0, at, 1.0)), 0.0)
    else:
        s = math.tan(0.5 * math.pi * alpha_s)
    return np.exp(1j * delta * t - gamma * at**alpha_s * (1.0 + 1j * beta * np.sign(t) * s))


def empirical_cf(samples, t) -> np.ndarray:
    """Monte Carlo estimate ``mean(exp(j*t*x))`` for each ``t``."""
    x = np.asarray(samples, dtype=np.float64)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    return np.exp(1j * np.outer(t, x)).mean(axis=1)
