"""Bounded Adam least-squares fitting for every sub-model curve.

Each sub-model exposes a vectorized ``predict(X, p)`` and the matching
parameter Jacobian so the squared-error loss has an analytic gradient.
The optimizer is Adam with bias correction plus two practical
additions: parameters are clamped to their box bounds after every
step, and the learning rate follows a fixed four-phase schedule
(explore at the base rate, drop, crawl at a tenth of it, then anneal
geometrically to a tiny floor). Constant-rate Adam orbits the optimum
at a radius set by the rate; the crawl phase walks the long shallow
valleys these curve families produce, and the anneal settles the
iterate well below the round-trip accuracy the tests demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import models
from .datasets import Dataset
from .errors import ConfigError, FitDivergedError
from .params import FrictionParams, MotorParams, SteeringParams


# Learning-rate schedule shape: fractions of the budget spent at the
# base rate, dropping to the crawl rate, and crawling; the remainder
# anneals to final_learning_rate.
_PHASE_CONST = 0.2
_PHASE_DROP = 0.1
_PHASE_CRAWL = 0.45
_CRAWL_FACTOR = 0.1


@dataclass
class FitConfig:
    initial: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    max_iterations: int = 20000
    tolerance: float = 1e-10  # relative loss-delta considered "no movement"
    patience: int = 50  # consecutive no-movement iterations before stopping
    eps: float = 1e-8
    final_learning_rate: float = 1e-9

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be > 0")
        if not 0 < self.final_learning_rate <= self.learning_rate:
            raise ConfigError("final learning rate must lie in (0, learning_rate]")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("decay rates must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ConfigError("iteration budget must be >= 1")
        if not (self.initial.shape == self.lower.shape == self.upper.shape):
            raise ConfigError("initial, lower and upper must have equal shape")
        if np.any(self.lower > self.upper):
            raise ConfigError("lower bounds exceed upper bounds")
        if np.any(self.initial < self.lower) or np.any(self.initial > self.upper):
            raise ConfigError("initial parameters must lie within bounds")

    def learning_rate_at(self, k: int) -> float:
        """Scheduled rate at iteration k (1-based)."""
        n = self.max_iterations
        k1 = int(n * _PHASE_CONST)
        k2 = int(n * (_PHASE_CONST + _PHASE_DROP))
        k3 = int(n * (_PHASE_CONST + _PHASE_DROP + _PHASE_CRAWL))
        crawl = self.learning_rate * _CRAWL_FACTOR
        if k <= k1:
            return self.learning_rate
        if k <= k2:
            ratio = (crawl / self.learning_rate) ** (1.0 / max(k2 - k1, 1))
            return self.learning_rate * ratio ** (k - k1)
        if k <= k3:
            return crawl
        ratio = (self.final_learning_rate / crawl) ** (1.0 / max(n - k3, 1))
        return crawl * ratio ** (k - k3)


@dataclass(frozen=True)
class FitResult:
    params: np.ndarray
    loss: float
    trace: np.ndarray  # loss per iteration, trace[-1] == loss
    iterations: int
    converged: bool


def squared_error_loss(predict: Callable, params, data: Dataset) -> float:
    """Sum over rows of the squared residual norm."""
    residual = predict(data.X, np.asarray(params, dtype=float)) - data.Y
    return float(np.sum(residual * residual))


def adam_fit(objective: Callable, config: FitConfig) -> FitResult:
    """Minimize ``objective(p) -> (loss, grad)`` inside a parameter box.

    Adaptive-moment steps with bias correction; iterates are clamped to
    the box after every update. Stops early once the loss has stopped
    moving (delta below tolerance) for ``patience`` consecutive
    iterations, otherwise runs the full scheduled budget.
    """
    p = config.initial.copy()
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    trace = []
    still = 0
    converged = False

    loss, grad = objective(p)
    for k in range(1, config.max_iterations + 1):
        if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
            raise FitDivergedError("non-finite loss or gradient", iteration=k - 1)
        trace.append(loss)

        m = config.beta1 * m + (1 - config.beta1) * grad
        v = config.beta2 * v + (1 - config.beta2) * grad * grad
        m_hat = m / (1 - config.beta1**k)
        v_hat = v / (1 - config.beta2**k)
        p = p - config.learning_rate_at(k) * m_hat / (np.sqrt(v_hat) + config.eps)
        p = np.clip(p, config.lower, config.upper)

        new_loss, grad = objective(p)
        if not np.isfinite(new_loss):
            raise FitDivergedError("non-finite loss", iteration=k)

        moved = abs(new_loss - loss) >= config.tolerance * max(loss, 1e-300)
        still = 0 if moved else still + 1
        loss = new_loss
        if still >= config.patience:
            trace.append(loss)
            converged = True
            break
    else:
        trace.append(loss)

    return FitResult(
        params=p,
        loss=float(loss),
        trace=np.asarray(trace),
        iterations=len(trace) - 1,
        converged=converged,
    )


def least_squares_objective(predict: Callable, jacobian: Callable, data: Dataset) -> Callable:
    """Wrap predict/jacobian into an ``objective(p) -> (loss, grad)``."""

    X, Y = data.X, data.Y

    def objective(p):
        p = np.asarray(p, dtype=float)
        residual = predict(X, p) - Y  # (N, n)
        loss = float(np.sum(residual * residual))
        jac = jacobian(X, p)  # (N, n, n_p)
        grad = 2.0 * np.einsum("ij,ijk->k", residual, jac)
        return loss, grad

    return objective


def finite_difference_gradient(fn: Callable, p, step: float = 1e-6) -> np.ndarray:
    """Central finite differences with per-parameter relative steps."""
    p = np.asarray(p, dtype=float)
    grad = np.empty_like(p)
    for i in range(p.size):
        h = step * max(1.0, abs(p[i]))
        hi, lo = p.copy(), p.copy()
        hi[i] += h
        lo[i] -= h
        grad[i] = (fn(hi) - fn(lo)) / (2 * h)
    return grad


# --- sub-model curves in fit-vector form -------------------------------
#
# Parameter vector orderings match the corresponding params dataclasses.


def friction_predict(X, p):
    v = X[:, 0:1]
    return -(p[0] * np.tanh(p[1] * v) + v * p[2])


def friction_jacobian(X, p):
    v = X[:, 0:1]
    th = np.tanh(p[1] * v)
    return np.stack([-th, -p[0] * v * (1 - th * th), -v], axis=-1)


def motor_predict(X, p):
    tau, v = X[:, 0:1], X[:, 1:2]
    gate = np.tanh(models.THROTTLE_SHARPNESS * (tau + p[2]))
    soft = (tau + p[2]) * 0.5 * (gate + 1.0)
    return (p[0] - v * p[1]) * soft


def motor_jacobian(X, p):
    tau, v = X[:, 0:1], X[:, 1:2]
    k = models.THROTTLE_SHARPNESS
    x = tau + p[2]
    gate = np.tanh(k * x)
    soft = x * 0.5 * (gate + 1.0)
    dsoft_dg = 0.5 * (gate + 1.0) + x * 0.5 * k * (1 - gate * gate)
    return np.stack([soft, -v * soft, (p[0] - v * p[1]) * dsoft_dg], axis=-1)


def steering_predict(X, p):
    s = X[:, 0:1]
    a_t, b_t, c_t, d_t, e_t = p
    x = s + c_t
    w = 0.5 * (np.tanh(models.STEER_BLEND_SHARPNESS * x) + 1.0)
    return w * a_t * np.tanh(b_t * x) + (1 - w) * d_t * np.tanh(e_t * x)


def steering_jacobian(X, p):
    s = X[:, 0:1]
    a_t, b_t, c_t, d_t, e_t = p
    k = models.STEER_BLEND_SHARPNESS
    x = s + c_t
    gate = np.tanh(k * x)
    w = 0.5 * (gate + 1.0)
    tb, te = np.tanh(b_t * x), np.tanh(e_t * x)
    sech_b, sech_e = 1 - tb * tb, 1 - te * te
    dw_dc = 0.5 * k * (1 - gate * gate)
    d_c = (
        w * a_t * b_t * sech_b
        + (1 - w) * d_t * e_t * sech_e
        + dw_dc * (a_t * tb - d_t * te)
    )
    return np.stack(
        [w * tb, w * a_t * x * sech_b, d_c, (1 - w) * te, (1 - w) * d_t * x * sech_e],
        axis=-1,
    )


def pacejka_predict(X, p):
    alpha = X[:, 0:1]
    D, C, B, E = p
    ba = B * alpha
    u = ba - E * (ba - np.arctan(ba))
    return D * np.sin(C * np.arctan(u))


def pacejka_jacobian(X, p):
    alpha = X[:, 0:1]
    D, C, B, E = p
    ba = B * alpha
    atan_ba = np.arctan(ba)
    u = ba - E * (ba - atan_ba)
    atan_u = np.arctan(u)
    outer = np.cos(C * atan_u)
    du = D * outer * C / (1 + u * u)
    du_dB = alpha * (1 - E * (1 - 1 / (1 + ba * ba)))
    return np.stack(
        [np.sin(C * atan_u), D * outer * atan_u, du * du_dB, du * -(ba - atan_ba)],
        axis=-1,
    )


def rear_tire_predict(X, p):
    return p[0] * X[:, 0:1]


def rear_tire_jacobian(X, p):
    return X[:, 0:1][..., None]


# --- default fit setups -------------------------------------------------

_SUBMODELS = {
    "friction": (friction_predict, friction_jacobian),
    "motor": (motor_predict, motor_jacobian),
    "steering": (steering_predict, steering_jacobian),
    "front_tire": (pacejka_predict, pacejka_jacobian),
    "rear_tire": (rear_tire_predict, rear_tire_jacobian),
}

_DEFAULTS = {
    # initial guess, lower, upper, iteration budget. Guesses are
    # order-of-magnitude values a practitioner would read off a plot of
    # the data; everything is overridable via FitConfig. The two
    # blended-sigmoid families crawl along shallow coupled valleys and
    # get longer budgets (their datasets are small, so this is cheap).
    "friction": ((1.0, 10.0, 0.1), (1e-3, 1e-3, 0.0), (20.0, 100.0, 10.0), 20000),
    "motor": ((20.0, 5.0, -0.1), (1e-3, 1e-3, -0.99), (100.0, 100.0, 0.0), 20000),
    "steering": (
        (1.0, 1.0, 0.0, 1.0, 1.0),
        (1e-3, 1e-3, -0.9, 1e-3, 1e-3),
        (3.0, 5.0, 0.9, 3.0, 5.0),
        40000,
    ),
    "front_tire": ((3.0, 1.0, 1.0, 0.0), (1e-3, 0.05, 1e-3, -10.0), (20.0, 2.0, 20.0, 0.99), 30000),
    "rear_tire": ((1.0,), (1e-3,), (100.0,), 20000),
}


def default_config(sub_model: str, **overrides) -> FitConfig:
    if sub_model not in _DEFAULTS:
        raise ConfigError(f"unknown sub-model {sub_model!r}")
    init, lo, hi, budget = _DEFAULTS[sub_model]
    cfg = FitConfig(
        initial=np.array(init), lower=np.array(lo), upper=np.array(hi),
        max_iterations=budget,
    )
    for key, value in overrides.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown FitConfig field {key!r}")
        setattr(cfg, key, value)
    return cfg


def submodel_objective(sub_model: str, data: Dataset) -> Callable:
    predict, jacobian = _SUBMODELS[sub_model]
    return least_squares_objective(predict, jacobian, data)


def _fit(sub_model: str, data: Dataset, config: FitConfig | None) -> FitResult:
    cfg = config or default_config(sub_model)
    return adam_fit(submodel_objective(sub_model, data), cfg)


def fit_friction(data: Dataset, config: FitConfig | None = None):
    result = _fit("friction", data, config)
    a, b, c = result.params
    return FrictionParams(a=float(a), b=float(b), c=float(c)), result


def fit_motor(data: Dataset, config: FitConfig | None = None):
    result = _fit("motor", data, config)
    d, e, g = result.params
    return MotorParams(d=float(d), e=float(e), g=float(g)), result


def fit_steering(data: Dataset, config: FitConfig | None = None):
    result = _fit("steering", data, config)
    a_t, b_t, c_t, d_t, e_t = result.params
    return (
        SteeringParams(a_t=float(a_t), b_t=float(b_t), c_t=float(c_t), d_t=float(d_t), e_t=float(e_t)),
        result,
    )


def fit_front_tire(data: Dataset, config: FitConfig | None = None):
    """Returns the magic-formula coefficients; C_r is fitted separately."""
    result = _fit("front_tire", data, config)
    return result.params, result


def fit_rear_tire(data: Dataset, config: FitConfig | None = None):
    result = _fit("rear_tire", data, config)
    return float(result.params[0]), result
