"""Stability bound, steady-state MSE prediction and per-iteration complexity.

Notation: ``lam`` are the eigenvalues of the filtered-reference covariance
``R = E[x'(n) x'(n)^T]``, ``Phi`` the averaged score value, ``mu`` the
effective FXHEKM step ``rho*eta*p`` and ``j_min`` the minimum MSE, taken as
the measurement-noise variance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .algorithms import HekmParams, _abs_pow, hekm_kernel_gain, hekm_phi
from .errors import ConfigurationError, TheoryError


@dataclass(frozen=True)
class TheoryInputs:
    eigenvalues: np.ndarray
    phi_bar: float
    mu: float
    j_min: float

    def __post_init__(self):
        lam = np.sort(np.asarray(self.eigenvalues, dtype=np.float64).reshape(-1))[::-1]
        if lam.size == 0:
            raise ConfigurationError("at least one eigenvalue is required")
        if np.any(lam < 0):
            raise ConfigurationError("eigenvalues must be non-negative")
        if self.mu <= 0:
            raise ConfigurationError("mu must be positive")
        if self.j_min < 0:
            raise ConfigurationError("j_min must be non-negative")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])


def _traces(error_trace, ref_norm_trace):
    e = np.asarray(error_trace, dtype=np.float64).reshape(-1)
    r = np.asarray(ref_norm_trace, dtype=np.float64).reshape(-1)
    if e.size == 0 or r.size == 0:
        raise ConfigurationError("traces must be non-empty")
    if e.size != r.size:
        raise ConfigurationError("error and reference-norm traces differ in length")
    return e, r


def estimate_phi_bar(error_trace, ref_norm_trace, params: HekmParams) -> float:
    """Trace average of the signed score, ``(1/N) sum phi(e(n))``."""
    e, r = _traces(error_trace, ref_norm_trace)
    return float(np.mean(hekm_phi(e, r, params)))


def estimate_phi_gain(error_trace, ref_norm_trace, params: HekmParams) -> float:
    """Trace average of the linearized gain ``phi(e)/e``.

    This is the factor multiplying the error in the weight update, i.e. the
    quantity the mean weight-error recursion ``(1 - mu*Phi*lam)`` needs.
    Samples with ``e = 0`` contribute the limit value, defined for ``p >= 2``.
    """
    e, r = _traces(error_trace, ref_norm_trace)
    kern = hekm_kernel_gain(e, r, params)
    if params.p == 2.0:
        return float(np.mean(kern))
    nz = e != 0
    if params.p < 2.0 and not np.all(nz):
        e, kern = e[nz], kern[nz]
        if e.size == 0:
            raise TheoryError("gain undefined: every error sample is zero and p < 2")
    return float(np.mean(kern * _abs_pow(e, params.p - 2.0)))


def reference_vectors(x_filtered, length: int, start: int = 0) -> np.ndarray:
    """Stack the regressors ``[x'(n), ..., x'(n-L+1)]`` for ``n >= start`` (zero pre-history)."""
    xf = np.asarray(x_filtered, dtype=np.float64).reshape(-1)
    padded = np.concatenate([np.zeros(length - 1), xf])
    return sliding_window_view(padded, length)[start:, ::-1]


def estimate_reference_covariance(ref_vectors) -> np.ndarray:
    """Eigenvalues (descending, clamped at 0) of ``(1/N) sum x' x'^T``."""
    v = np.asarray(ref_vectors, dtype=np.float64)
    if v.ndim != 2:
        raise ConfigurationError("expected a 2-D stack of reference vectors")
    n, length = v.shape
    if n < length:
        raise ConfigurationError(f"need at least L={length} vectors, got {n}")
    return covariance_eigenvalues(v.T @ v / n)


def covariance_eigenvalues(cov) -> np.ndarray:
    lam = np.linalg.eigvalsh(0.5 * (cov + cov.T))[::-1]
    if np.any(lam < -1e-10):
        raise TheoryError("covariance is not positive semi-definite")
    return np.clip(lam, 0.0, None)


def stability_bound(theory: TheoryInputs, special_case_p2: bool = False) -> tuple[float, float]:
    """Admissible step-size interval ``(0, c/(lam_max*Phi))``, ``c = 1`` for the p = 2 form else 2."""
    denom = theory.lambda_max * theory.phi_bar
    if not denom > 0:
        raise TheoryError(f"lambda_max * Phi = {denom:g} must be positive")
    return 0.0, (1.0 if special_case_p2 else 2.0) / denom


def mean_weight_error_modes(theory: TheoryInputs, steps: int, initial=1.0) -> np.ndarray:
    """``E[eps'_k(n)] = (1 - mu*Phi*lam_k)^n * eps'_k(0)`` for ``n = 0..steps``."""
    factor = 1.0 - theory.mu * theory.phi_bar * theory.eigenvalues
    n = np.arange(steps + 1)[:, None]
    return factor[None, :] ** n * np.broadcast_to(initial, factor.shape)


class SteadyState(NamedTuple):
    j_ex: float
    misalignment: float
    j_inf: float


def steady_state_mse(theory: TheoryInputs) -> SteadyState:
    """Excess MSE, misalignment ``M = sum lam/(2 - mu^2 Phi^2 lam)`` and ``J_min (1 + M)``."""
    lam = theory.eigenvalues
    denom = 2.0 - (theory.mu * theory.phi_bar) ** 2 * lam
    if np.any(denom <= 0):
        raise TheoryError("step size outside the steady-state regime (2 - mu^2 Phi^2 lam <= 0)")
    m = float(np.sum(lam / denom))
    return SteadyState(theory.j_min * m, m, theory.j_min * (1.0 + m))


def steady_state_diagonal(theory: TheoryInputs) -> np.ndarray:
    """Closed-form fixed point ``u_ii = J_min / (2 - mu^2 Phi^2 lam_i)``.

    Modes whose coupling ``mu^2 Phi^2 lam_i`` is zero (including underflow) are
    never excited from ``u(0) = 0`` and stay at 0.
    """
    lam = theory.eigenvalues
    a = (theory.mu * theory.phi_bar) ** 2 * lam
    return np.where(a > 0, theory.j_min / (2.0 - a), 0.0)


def covariance_recursion_check(
    theory: TheoryInputs, steps: int = 1_000_000, rtol: float = 1e-15
) -> np.ndarray:
    """Iterate ``u(n+1) = (1 - a)^2 u(n) + a*J_min`` with ``a = mu^2 Phi^2 lam``, ``u(0) = 0``.

    Stops once no diagonal entry moves by more than ``rtol`` relative to its
    value. Returns the iterates, shape ``(n_done + 1, L)``.
    """
    lam = theory.eigenvalues
    a = (theory.mu * theory.phi_bar) ** 2 * lam
    if np.any((a < 0) | (a >= 2)):
        raise TheoryError("recursion is not contractive: need 0 <= mu^2 Phi^2 lam < 2")
    contraction = (1.0 - a) ** 2
    forcing = a * theory.j_min
    u = np.zeros_like(lam)
    out = [u]
    for _ in range(steps):
        nxt = contraction * u + forcing
        out.append(nxt)
        if np.all(np.abs(nxt - u) <= rtol * np.maximum(np.abs(nxt), 1e-300)):
            return np.array(out)
        u = nxt
    raise TheoryError(f"covariance recursion did not converge within {steps} steps")


class Complexity(NamedTuple):
    mults: int
    divs: int
    adds: int
    nonlinear: int


TABLE_ROWS = ("FXLMS", "FXGMCC", "FXGHT", "IFXGMCC", "FXGR", "FXECH", "FXHEKM")


def _table_rows(L: int, M: int, p: int) -> dict:
    return {
        "FXLMS": (2 * L + 1, 0, 2 * L + 2 * M - 3, 0),
        "FXGMCC": (2 * L + 4, 0, 2 * L + 2 * M - 3, 3),
        "FXGHT": ((p + 5) * (L - 1) + L, 0, 3 * L - 2, 1),
        "IFXGMCC": (2 * L + 6, 0, 2 * L + 2 * M - 3, 4),
        "FXGR": (2 * L, 1, 2 * L, 0),
        "FXECH": (2 * L + p + 8, 1, 2 * L + 2, 2),
        "FXHEKM": (3 * L + 2 * p + 7, 1, 3 * L - 2, 4),
    }


def complexity_count(kind: str, L: int, M: int = 1, p: int = 2) -> Complexity:
    """Per-iteration operation counts; ``M`` is the secondary-path model length."""
    if L < 1 or M < 1:
        raise ConfigurationError("L and M must be >= 1")
    rows = _table_rows(L, M, p)
    key = str(kind).upper()
    if key == "FXECHF":
        key = "FXECH"
    if key not in rows:
        raise ConfigurationError(f"unknown algorithm {kind!r}")
    return Complexity(*rows[key])


def theory_report(theory: TheoryInputs, **extra) -> dict:
    """Key-value theory summary; J values are also given in dB."""
    _, mu_hi = stability_bound(theory)
    _, mu_hi_p2 = stability_bound(theory, special_case_p2=True)
    ss = steady_state_mse(theory)
    report = {
        "phi": theory.phi_bar,
        "lambda_max": theory.lambda_max,
        "lambda_sum": float(np.sum(theory.eigenvalues)),
        "mu": theory.mu,
        "mu_hi": mu_hi,
        "mu_hi_p2": mu_hi_p2,
        "j_min": theory.j_min,
        "j_min_db": 10.0 * np.log10(theory.j_min) if theory.j_min > 0 else float("-inf"),
        "misalignment": ss.misalignment,
        "j_ex": ss.j_ex,
        "j_inf": ss.j_inf,
        "j_inf_db": 10.0 * np.log10(ss.j_inf) if ss.j_inf > 0 else float("-inf"),
    }
    report.update(extra)
    return report
