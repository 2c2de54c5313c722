"""Filtered-X controllers: FXHEKM and six competing robust update rules.

Every controller adapts an FIR filter with the same structure

    w(n+1) = w(n) + g(n) * x'(n)

and differs only in the scalar gain ``g(n)``, which depends on the error
sample and, for normalized rules, on ``||x'(n)||^2``. Scalars and batches are
both accepted: a batch carries a leading trial axis on every array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigurationError
from .paths import DIVERGENCE_LIMIT, PlantState, step_plant
from .signal import DelayLine, tap_dot


def _sech2(x):
    c = np.cosh(x)
    return 1.0 / (c * c)


def _abs_pow(e, power):
    """``|e| ** power`` with the convention ``0 ** power = 0`` for any power."""
    a = np.abs(e)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, np.power(a, power), 0.0)
    return out if np.ndim(out) else float(out)


def _positive(**kw):
    for k, v in kw.items():
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ConfigurationError(f"{k} must be a positive finite number, got {v!r}")


# ---------------------------------------------------------------------------
# FXHEKM
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HekmParams:
    rho: float = 0.1
    eta: float = 1.0
    alpha: float = 0.4
    p: float = 2.0
    zeta: float = 0.2
    delta_reg: float = 1e-6

    def __post_init__(self):
        _positive(**asdict(self))

    @property
    def mu(self) -> float:
        """Effective step size ``rho * eta * p``."""
        return self.rho * self.eta * self.p


def hekm_objective(e, params: HekmParams):
    """``J(e) = -(rho/alpha) * tanh(alpha * exp(-eta*|e|^p))``."""
    k = np.exp(-params.eta * _abs_pow(e, params.p))
    return -(params.rho / params.alpha) * np.tanh(params.alpha * k)


def hekm_kernel_gain(e, ref_norm_sq, params: HekmParams):
    """``sech^2(alpha*k) * k / (delta + ||x'||^2)`` with ``k = exp(-eta*|e|^p)``.

    This is the score function with the ``|e|^(p-1) sign(e)`` factor removed;
    it is even in ``e`` and strictly positive.
    """
    k = np.exp(-params.eta * _abs_pow(e, params.p))
    return _sech2(params.alpha * k) * k / (params.delta_reg + ref_norm_sq)


def hekm_phi(e, ref_norm_sq, params: HekmParams):
    """Normalized FXHEKM score ``phi(e)``; odd in ``e`` and zero at ``e = 0``."""
    if np.any(np.asarray(ref_norm_sq) < 0):
        raise ConfigurationError("ref_norm_sq must be non-negative")
    return (
        hekm_kernel_gain(e, ref_norm_sq, params)
        * _abs_pow(e, params.p - 1.0)
        * np.sign(e)
    )


def hekm_gate(e, zeta: float):
    """M-estimate gate: 1 where ``|e| < zeta``, 0 otherwise (boundary rejected)."""
    if zeta <= 0:
        raise ConfigurationError("zeta must be positive")
    g = (np.abs(e) < zeta).astype(np.float64)
    return g if np.ndim(g) else float(g)


# ---------------------------------------------------------------------------
# Update rules
# ---------------------------------------------------------------------------

REGISTRY: dict[str, type["UpdateRule"]] = {}


class UpdateRule:
    """Base class; subclasses register themselves under ``name``.

    ``score(e)`` is the unnormalized score function psi(e). ``gain(e, r)``
    is the full multiplier of ``x'(n)`` in the weight update.
    """

    name: str = ""
    normalized = False

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        if cls.name:
            REGISTRY[cls.name] = cls

    def score(self, e):
        raise NotImplementedError

    @property
    def step_size(self) -> float:
        return self.mu

    def gain(self, e, ref_norm_sq):
        g = self.step_size * self.score(e)
        if self.normalized:
            g = g / (self.delta_reg + ref_norm_sq)
        return g

    def describe(self) -> dict:
        return {"algorithm": self.name, **asdict(self)}


@dataclass(frozen=True)
class FXHEKM(UpdateRule):
    """Gated hyperbolic-tangent exponential kernel rule, step ``mu = rho*eta*p``."""

    rho: float = 0.1
    eta: float = 1.0
    alpha: float = 0.4
    p: float = 2.0
    zeta: float = 0.2
    delta_reg: float = 1e-6
    name = "FXHEKM"
    normalized = True

    def __post_init__(self):
        _positive(**asdict(self))

    @property
    def params(self) -> HekmParams:
        return HekmParams(self.rho, self.eta, self.alpha, self.p, self.zeta, self.delta_reg)

    @property
    def mu(self) -> float:
        return self.rho * self.eta * self.p

    def score(self, e):
        k = np.exp(-self.eta * _abs_pow(e, self.p))
        return _sech2(self.alpha * k) * k * _abs_pow(e, self.p - 1.0) * np.sign(e)

    def gain(self, e, ref_norm_sq):
        return self.mu * hekm_gate(e, self.zeta) * hekm_phi(e, ref_norm_sq, self.params)

    def describe(self) -> dict:
        return {**super().describe(), "mu_effective": self.mu}


@dataclass(frozen=True)
class FXLMS(UpdateRule):
    mu: float = 0.1
    name = "FXLMS"

    def __post_init__(self):
        _positive(mu=self.mu)

    def score(self, e):
        return e


@dataclass(frozen=True)
class FXGR(UpdateRule):
    """LMS with the hard M-estimate rejection of large errors."""

    mu: float = 0.1
    zeta: float = 0.2
    name = "FXGR"

    def __post_init__(self):
        _positive(mu=self.mu, zeta=self.zeta)

    def score(self, e):
        return e * hekm_gate(e, self.zeta)


@dataclass(frozen=True)
class FXGMCC(UpdateRule):
    """Generalized correntropy: ``psi = exp(-nu*|e/sigma|^p) |e|^(p-1) sign(e)``."""

    mu: float = 0.0495
    sigma: float = 1.5
    p: float = 1.7
    nu: float = 1.0
    name = "FXGMCC"

    def __post_init__(self):
        _positive(mu=self.mu, sigma=self.sigma, p=self.p, nu=self.nu)

    def score(self, e):
        kern = np.exp(-self.nu * _abs_pow(np.asarray(e) / self.sigma, self.p))
        return kern * _abs_pow(e, self.p - 1.0) * np.sign(e)


@dataclass(frozen=True)
class IFXGMCC(FXGMCC):
    """Generalized correntropy score with a filtered-reference normalized step."""

    mu: float = 0.0535
    sigma: float = 2.0
    p: float = 1.5
    nu: float = 0.5
    delta_reg: float = 1e-6
    name = "IFXGMCC"
    normalized = True

    def __post_init__(self):
        _positive(mu=self.mu, sigma=self.sigma, p=self.p, nu=self.nu, delta_reg=self.delta_reg)


@dataclass(frozen=True)
class FXGHT(UpdateRule):
    """Generalized hyperbolic tangent: ``psi = sech^2(lam*|e|^p/sigma) |e|^(p-1) sign(e)``."""

    rho: float = 0.1
    lam: float = 0.4
    p: float = 2.0
    sigma: float = 14.5
    name = "FXGHT"

    def __post_init__(self):
        _positive(rho=self.rho, lam=self.lam, p=self.p, sigma=self.sigma)

    @property
    def mu(self) -> float:
        return self.rho

    def score(self, e):
        return (
            _sech2(self.lam * _abs_pow(e, self.p) / self.sigma)
            * _abs_pow(e, self.p - 1.0)
            * np.sign(e)
        )


@dataclass(frozen=True)
class FXECH(UpdateRule):
    """Exponential hyperbolic cosine: ``psi = gamma**(-lam*(cosh(e)-1)) |e|^(p-1) sign(e)``."""

    mu: float = 0.034
    lam: float = 3.4
    p: float = 2.0
    gamma: float = math.e
    name = "FXECH"

    def __post_init__(self):
        _positive(mu=self.mu, lam=self.lam, p=self.p, gamma=self.gamma)

    def score(self, e):
        with np.errstate(over="ignore"):
            damp = np.exp(-self.lam * math.log(self.gamma) * (np.cosh(e) - 1.0))
        return damp * _abs_pow(e, self.p - 1.0) * np.sign(e)


ALGORITHM_IDS = tuple(REGISTRY)


def make_rule(kind: str, **params) -> UpdateRule:
    """Instantiate an update rule by its algorithm id (case-insensitive)."""
    key = {k.lower(): k for k in REGISTRY}.get(str(kind).lower())
    if key is None:
        raise ConfigurationError(f"unknown algorithm {kind!r}; known: {', '.join(REGISTRY)}")
    try:
        return REGISTRY[key](**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {key}: {exc}") from exc


# ---------------------------------------------------------------------------
# Controller state and stepping
# ---------------------------------------------------------------------------


class ControllerState:
    """Adaptive FIR controller: weights, reference lines, rule, and divergence flag."""

    def __init__(self, rule: UpdateRule, length: int, batch: int | None = None):
        if length < 1:
            raise ConfigurationError("filter length L must be >= 1")
        self.rule = rule
        self.length = int(length)
        self.batch = batch
        shape = (self.length,) if batch is None else (int(batch), self.length)
        self.weights = np.zeros(shape)
        self.reference = DelayLine(self.length, batch)
        self.filtered_ref = DelayLine(self.length, batch)
        self.iteration = 0
        self.diverged = False if batch is None else np.zeros(int(batch), dtype=bool)

    @property
    def params(self):
        return self.rule


def update(state: ControllerState, e) -> None:
    """Apply one weight update of ``state.rule`` using the current ``x'(n)`` line.

    Streams whose error is non-finite, or whose weights leave
    ``[-1e6, 1e6]``, are flagged diverged and frozen from then on.
    """
    xf = state.filtered_ref.buffer
    with np.errstate(all="ignore"):
        g = state.rule.gain(e, state.filtered_ref.energy())
    bad = ~np.isfinite(e) | ~np.isfinite(g)
    if state.batch is None:
        if state.diverged or bad:
            state.diverged = True
        elif g != 0.0:
            state.weights += g * xf
            if not np.all(np.abs(state.weights) <= DIVERGENCE_LIMIT):
                state.diverged = True
    else:
        state.diverged |= bad
        active = (g != 0.0) & ~state.diverged
        if active.all():
            state.weights += g[:, None] * xf
        elif active.any():
            state.weights[active] += g[active, None] * xf[active]
        over = ~np.all(np.abs(state.weights) <= DIVERGENCE_LIMIT, axis=-1)
        state.diverged |= over
    state.iteration += 1


def hekm_update(state: ControllerState, e) -> None:
    if not isinstance(state.rule, FXHEKM):
        raise ConfigurationError("hekm_update requires an FXHEKM controller")
    update(state, e)


def generic_fx_update(state: ControllerState, e, kind: str | None = None) -> None:
    if kind is not None and kind.upper() != state.rule.name:
        if kind.upper() not in REGISTRY:
            raise ConfigurationError(f"unknown algorithm {kind!r}")
        raise ConfigurationError(f"controller runs {state.rule.name}, not {kind}")
    update(state, e)


@dataclass
class ControllerTrace:
    """Per-iteration record; arrays are ``(N,)`` or ``(T, N)``."""

    e: np.ndarray
    d: np.ndarray
    y: np.ndarray
    w_norm: np.ndarray
    x_filtered: np.ndarray
    ref_norm_sq: np.ndarray
    diverged: np.ndarray | bool
    diverged_at: np.ndarray | int


def run_controller(
    plant: PlantState, controller: ControllerState, noise, n_iters: int, measurement=None
) -> ControllerTrace:
    """Execute the filtered-X loop for ``n_iters`` samples.

    Per sample: ``y = w.x``; propagate through the plant; ``e = d - s*y``;
    push ``x'`` and update. ``noise`` is the reference stream ``x(n)``
    (time on the last axis); ``measurement`` the additive ``v(n)``.
    """
    x = np.asarray(noise, dtype=np.float64)
    if x.shape[-1] < n_iters:
        raise ConfigurationError(f"noise stream shorter than n_iters={n_iters}")
    if controller.batch != plant.batch:
        raise ConfigurationError("controller and plant batch sizes differ")
    v = np.zeros_like(x) if measurement is None else np.asarray(measurement, dtype=np.float64)
    out_shape = x.shape[:-1] + (n_iters,)
    e_tr, d_tr, y_tr, wn_tr, xf_tr, rn_tr = (np.empty(out_shape) for _ in range(6))
    div_at = np.full(x.shape[:-1], -1, dtype=np.int64)

    for n in range(n_iters):
        xn = x[..., n]
        controller.reference.push(xn)
        y = tap_dot(controller.weights, controller.reference.buffer)
        d, e, xf = step_plant(plant, xn, v[..., n], y)
        controller.filtered_ref.push(xf)
        was = np.copy(controller.diverged)
        update(controller, e)
        newly = np.asarray(controller.diverged) & ~was
        if np.any(newly):
            div_at = np.where(newly, n, div_at)
        e_tr[..., n] = e
        d_tr[..., n] = d
        y_tr[..., n] = y
        wn_tr[..., n] = np.sqrt(tap_dot(controller.weights, controller.weights))
        xf_tr[..., n] = xf
        rn_tr[..., n] = controller.filtered_ref.energy()

    diverged = controller.diverged if controller.batch is not None else bool(controller.diverged)
    return ControllerTrace(
        e_tr, d_tr, y_tr, wn_tr, xf_tr, rn_tr, np.copy(diverged),
        div_at if controller.batch is not None else int(div_at),
    )
