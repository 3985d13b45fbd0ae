"""One-step-ahead prediction error of a fitted model against a log.

Works on any CSV in the RawLog dialect, including trajectory exports
that carry exact state columns. When a dynamic-model validation has to
fall back from state columns to motion-capture data, the body-frame
lateral velocity is reconstructed by differentiation, which bounds the
achievable accuracy; exact checks should use trajectory exports.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import models
from .errors import ConfigError, DataError, ParseError
from .integrators import rk4_step
from .params import VehicleParams
from .preprocess import differentiate, smooth

logger = logging.getLogger(__name__)


def read_table(path: str | Path) -> dict[str, np.ndarray]:
    """Read a header-labelled numeric CSV into named columns."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ParseError(f"{path}: need a header and at least one row")
    header = [h.strip() for h in lines[0].split(",")]
    rows = []
    for i, line in enumerate(lines[1:], start=1):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields", row=i)
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"{path}: non-numeric field: {exc}", row=i) from exc
    data = np.asarray(rows, dtype=float)
    return {name: data[:, j] for j, name in enumerate(header)}


def _first_present(table: dict, *names: str) -> np.ndarray | None:
    for name in names:
        if name in table:
            return table[name]
    return None


def _applied_inputs(table: dict, params: VehicleParams, dt: float):
    tau_app = _first_present(table, "tau_applied")
    s_app = _first_present(table, "s_applied")
    if tau_app is not None and s_app is not None:
        return tau_app, s_app
    # reconstruct what the actuators saw by shifting the commands
    tau_cmd, s_cmd = table["tau"], table["s"]

    def shift(series, delay):
        k = int(round(delay / dt))
        if k == 0:
            return series
        return np.concatenate([np.full(k, series[0]), series[:-k]])

    return (
        shift(tau_cmd, params.delays.long_delay),
        shift(s_cmd, params.delays.steer_delay),
    )


def _dt_of(table: dict) -> float:
    t = table.get("t")
    if t is None or t.size < 2:
        raise DataError("log needs a time column with at least two rows")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise DataError("log time must be strictly increasing")
    dt = float(np.median(steps))
    if np.max(np.abs(steps - dt)) > 1e-6 * max(dt, 1.0):
        raise DataError("one-step validation needs a uniform sample rate")
    return dt


def _kinematic_states(table: dict) -> tuple[np.ndarray, list[str]]:
    v = _first_present(table, "v", "v_enc")
    if v is None:
        raise DataError("kinematic validation needs a v or v_enc column")
    x = _first_present(table, "x", "x_t")
    y = _first_present(table, "y", "y_t")
    eta = _first_present(table, "eta", "eta_t")
    if x is not None and y is not None and eta is not None:
        return np.column_stack([x, y, eta, v]), ["x", "y", "eta", "v"]
    # without pose the speed channel is still self-contained
    zeros = np.zeros_like(v)
    return np.column_stack([zeros, zeros, zeros, v]), ["v"]


def _dynamic_states(table: dict, smooth_window: int) -> tuple[np.ndarray, list[str]]:
    x = _first_present(table, "x", "x_t")
    y = _first_present(table, "y", "y_t")
    eta = _first_present(table, "eta", "eta_t")
    if x is None or y is None or eta is None:
        raise DataError("dynamic validation needs pose columns (state or mocap)")
    v_x = _first_present(table, "v_x", "v_enc")
    omega = _first_present(table, "omega", "omega_imu")
    if v_x is None or omega is None:
        raise DataError("dynamic validation needs v_x/v_enc and omega/omega_imu columns")
    v_y = _first_present(table, "v_y")
    if v_y is None:
        logger.warning("no v_y column; reconstructing it from pose by differentiation")
        t = table["t"]
        vx_abs = differentiate(smooth(x, smooth_window), t)
        vy_abs = differentiate(smooth(y, smooth_window), t)
        _, v_y = models.body_frame_velocity(vx_abs, vy_abs, eta)
    states = np.column_stack([x, y, eta, v_x, v_y, omega])
    return states, ["x", "y", "eta", "v_x", "v_y", "omega"]


def one_step_rms(
    table: dict[str, np.ndarray],
    params: VehicleParams,
    model: str,
    *,
    normalized: bool = False,
    smooth_window: int = 5,
) -> dict[str, float]:
    """Per-channel RMS of one-step-ahead predictions along a log."""
    if model not in ("kinematic", "dynamic"):
        raise ConfigError(f"unknown model kind {model!r}")
    dt = _dt_of(table)
    tau_app, s_app = _applied_inputs(table, params, dt)

    if model == "kinematic":
        states, channels = _kinematic_states(table)
    else:
        states, channels = _dynamic_states(table, smooth_window)

    current = states[:-1]
    target = states[1:]
    tau_k = tau_app[:-1]
    delta = models.steering_angle(s_app[:-1], params.steering)

    def net_force(v_long):
        return models.motor_force(tau_k, v_long, params.motor) + models.friction_force(
            v_long, params.friction
        )

    if model == "kinematic":
        rhs = lambda y: models.kinematic_rhs(y, delta, net_force(y[..., 3]), params.geometry)
    else:
        rhs = lambda y: models.dynamic_rhs(y, delta, net_force(y[..., 3]), params,
                                           normalized=normalized)
    predicted = rk4_step(rhs, current, dt)

    errors = predicted - target
    names = (
        models.KINEMATIC_STATE_NAMES if model == "kinematic" else models.DYNAMIC_STATE_NAMES
    )
    return {
        name: float(np.sqrt(np.mean(errors[:, i] ** 2)))
        for i, name in enumerate(names)
        if name in channels
    }
