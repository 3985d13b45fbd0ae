"""Turn raw logs into training matrices for the staged sub-model fits.

Each builder produces a Dataset whose X rows feed one sub-model curve
and whose Y rows are force or angle labels derived from the log by
smoothing, numerical differentiation and rigid-body bookkeeping.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import models
from .errors import DataError
from .logs import RawLog
from .params import VehicleParams
from .preprocess import (
    differentiate,
    erode_mask,
    local_poly_derivative,
    local_poly_value,
    rolling_stats,
    smooth,
)

logger = logging.getLogger(__name__)

# Speed below which encoder quantization dominates; rows under this are
# rejected by every operation that divides by or inverts velocity.
V_MIN = 0.05

# Default moving-average width applied to encoder speed and pose tracks
# before differentiation.
SMOOTH_WINDOW = 5

# Force labels differentiate noisy encoder speed, and the friction
# curve's tanh knee bends hard below 0.2 m/s: a moving average wide
# enough to tame the noise there flattens the knee and biases the
# fitted bend sharpness. The force builders therefore use a cubic
# local-polynomial derivative, which stays unbiased through the bend
# and supports a wide window.
FORCE_WINDOW = 21

# Steady-segment detection for constant-steering tests.
STEADY_WINDOW_S = 0.5
STEADY_REL_TOL = 0.05
# Absolute yaw-rate scale: a purely relative threshold would reject
# every near-zero-yaw segment as soon as the IMU has any noise.
STEADY_OMEGA_FLOOR = 0.3


@dataclass(frozen=True)
class Dataset:
    """Paired training inputs X (N x M) and labels Y (N x n)."""

    X: np.ndarray
    Y: np.ndarray
    x_names: tuple[str, ...]
    y_names: tuple[str, ...]

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if X.shape[0] != Y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if X.shape[0] == 0:
            raise DataError("dataset is empty")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DataError("dataset contains non-finite entries")
        if X.shape[1] != len(self.x_names) or Y.shape[1] != len(self.y_names):
            raise DataError("column descriptor count does not match matrix width")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    def __len__(self) -> int:
        return int(self.X.shape[0])


def _column(values: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=float).reshape(-1, 1)


# Commanded throttle leads the applied force by the actuation delay;
# rows within this many seconds of a throttle transition are discarded
# so delayed actuation cannot leak across the label stencil.
TRANSITION_GUARD_S = 0.05


def _stencil_guard(window: int, dt: float) -> int:
    # half smoothing window + central-difference reach + delay slack
    return window // 2 + 1 + int(np.ceil(TRANSITION_GUARD_S / dt))


def _force_rows(log: RawLog, m: float, window: int):
    """Smoothed speed and total-force labels m * dv/dt for one log."""
    v = local_poly_value(log.v_enc, window)
    force = m * local_poly_derivative(log.v_enc, log.dt, window)
    interior = np.ones(len(log), dtype=bool)
    trim = window // 2 + 1
    interior[:trim] = False
    interior[len(log) - trim :] = False
    return v, force, interior


def build_friction_dataset(
    logs: Sequence[RawLog],
    m: float,
    *,
    v_min: float = V_MIN,
    smooth_window: int = FORCE_WINDOW,
) -> Dataset:
    """Coasting rows only: X = speed, Y = total force (pure friction).

    A row qualifies when the commanded throttle is zero across the whole
    differentiation stencil (so delayed actuation and smoothing cannot
    leak motor force into the labels) and the vehicle is still moving.
    """
    xs, ys = [], []
    for log in logs:
        if len(log) < 3:
            continue
        guard = _stencil_guard(smooth_window, log.dt)
        v, force, interior = _force_rows(log, m, smooth_window)
        coasting = erode_mask(log.tau == 0.0, guard)
        keep = coasting & interior & (v > v_min)
        if np.any(keep):
            xs.append(v[keep])
            ys.append(force[keep])
    if not xs:
        raise DataError("no coasting data: need rows with tau = 0 and v > v_min")
    return Dataset(
        X=_column(np.concatenate(xs)),
        Y=_column(np.concatenate(ys)),
        x_names=("v [m/s]",),
        y_names=("F_friction [N]",),
    )


def build_motor_dataset(
    logs: Sequence[RawLog],
    m: float,
    friction,
    *,
    v_min: float = V_MIN,
    smooth_window: int = FORCE_WINDOW,
) -> Dataset:
    """Powered rows: X = (throttle, speed), Y = total force minus friction."""
    xs, ys = [], []
    for log in logs:
        if len(log) < 3:
            continue
        guard = _stencil_guard(smooth_window, log.dt)
        v, force, interior = _force_rows(log, m, smooth_window)
        powered = erode_mask(log.tau > 0.0, guard)
        keep = powered & interior
        if np.any(keep):
            xs.append(np.column_stack([log.tau[keep], v[keep]]))
            ys.append(force[keep] - models.friction_force(v[keep], friction))
    if not xs:
        raise DataError("no powered data: need rows with tau > 0")
    return Dataset(
        X=np.vstack(xs),
        Y=_column(np.concatenate(ys)),
        x_names=("tau", "v [m/s]"),
        y_names=("F_motor [N]",),
    )


def estimate_steering_angle_series(omega, v, l: float, *, v_min: float = V_MIN) -> np.ndarray:
    """Steering angle arctan(l * omega / v) from yaw rate and speed.

    Rows with v <= v_min are flagged as NaN rather than silently
    dropped, so callers keep their index alignment.
    """
    omega = np.asarray(omega, dtype=float)
    v = np.asarray(v, dtype=float)
    if omega.shape != v.shape:
        raise DataError("omega and v must have equal length")
    ok = v > v_min
    if not np.any(ok):
        raise DataError(f"all rows have v <= v_min ({v_min} m/s)")
    out = np.full(omega.shape, np.nan)
    out[ok] = np.arctan(l * omega[ok] / v[ok])
    return out


def _constant_runs(values: np.ndarray):
    """Yield (start, stop) index pairs of maximal constant runs."""
    n = values.size
    start = 0
    for i in range(1, n + 1):
        if i == n or values[i] != values[start]:
            yield start, i
            start = i


def build_steering_dataset(
    logs: Sequence[RawLog],
    l: float,
    *,
    v_min: float = V_MIN,
    smooth_window: int = SMOOTH_WINDOW,
    steady_window_s: float = STEADY_WINDOW_S,
    steady_rel_tol: float = STEADY_REL_TOL,
    omega_floor: float = STEADY_OMEGA_FLOOR,
    min_rows: int = 10,
) -> Dataset:
    """One averaged (s, delta) pair per steady constant-steering segment.

    A segment qualifies when the commanded steering is constant and the
    rolling standard deviation of the yaw rate stays below
    ``steady_rel_tol`` of max(|rolling mean|, ``omega_floor``), which
    rejects spin-up transients while tolerating sensor noise around
    zero yaw.
    """
    xs, ys = [], []
    skipped = 0
    for log in logs:
        if len(log) < 3:
            continue
        dt = log.dt
        stat_window = max(3, int(round(steady_window_s / dt)) | 1)
        v = smooth(log.v_enc, smooth_window)
        omega = smooth(log.omega_imu, smooth_window)
        for start, stop in _constant_runs(log.s):
            if stop - start < max(min_rows, stat_window):
                skipped += 1
                continue
            seg_omega = omega[start:stop]
            seg_v = v[start:stop]
            mean, std = rolling_stats(seg_omega, stat_window)
            steady = std < steady_rel_tol * np.maximum(np.abs(mean), omega_floor)
            usable = steady & (seg_v > v_min)
            if np.count_nonzero(usable) < min_rows:
                skipped += 1
                logger.warning(
                    "steering segment s=%+.2f in %s excluded (no steady rows above v_min)",
                    log.s[start],
                    log.name or "<log>",
                )
                continue
            delta = estimate_steering_angle_series(
                seg_omega[usable], seg_v[usable], l, v_min=v_min
            )
            xs.append(log.s[start])
            ys.append(np.nanmean(delta))
    if not xs:
        raise DataError("no steady constant-steering segments found")
    if skipped:
        logger.info("steering dataset: %d segments skipped", skipped)
    return Dataset(
        X=_column(np.asarray(xs)),
        Y=_column(np.asarray(ys)),
        x_names=("s",),
        y_names=("delta [rad]",),
    )


def build_tire_dataset(
    logs: Sequence[RawLog],
    params: VehicleParams,
    *,
    v_min: float = V_MIN,
    smooth_window: int = SMOOTH_WINDOW,
    normalized: bool = False,
    singular_tol: float = 1e-9,
) -> tuple[Dataset, Dataset]:
    """Slip-angle/lateral-force pairs for the front and rear tires.

    Pose tracks are differentiated twice (with smoothing between
    stages) to get body-frame velocities, accelerations and yaw
    acceleration. Per row, the planar rigid-body force balance is
    solved as a 3x3 linear system for the total longitudinal force and
    the two axle lateral forces; the front force is then projected into
    the steered tire frame assuming the drive force splits equally
    between the axles.
    """
    geom = params.geometry
    front_x, front_y, rear_x, rear_y = [], [], [], []
    for log in logs:
        if log.mocap is None:
            raise DataError(f"tire dataset needs motion-capture columns ({log.name or '<log>'})")
        if len(log) < 3 + 2 * smooth_window:
            continue
        t = log.t
        x = smooth(log.mocap.x_t, smooth_window)
        y = smooth(log.mocap.y_t, smooth_window)
        eta = smooth(log.mocap.eta_t, smooth_window)

        vx_abs = differentiate(x, t)
        vy_abs = differentiate(y, t)
        omega = differentiate(eta, t)
        ax_abs = differentiate(smooth(vx_abs, smooth_window), t)
        ay_abs = differentiate(smooth(vy_abs, smooth_window), t)
        domega = differentiate(smooth(omega, smooth_window), t)

        v_x, v_y = models.body_frame_velocity(vx_abs, vy_abs, eta)

        # applied steering lags the command by the identified delay
        shift = int(round(params.delays.steer_delay / log.dt))
        s_applied = np.concatenate([np.full(shift, log.s[0]), log.s[:-shift]]) if shift else log.s
        delta = models.steering_angle(s_applied, params.steering)

        cos_e, sin_e = np.cos(eta), np.sin(eta)
        n = len(log)
        m_rows = np.empty((n, 3, 3))
        m_rows[:, 0, 0] = cos_e
        m_rows[:, 0, 1] = -sin_e
        m_rows[:, 0, 2] = -sin_e
        m_rows[:, 1, 0] = sin_e
        m_rows[:, 1, 1] = cos_e
        m_rows[:, 1, 2] = cos_e
        m_rows[:, 2, 0] = 0.0
        m_rows[:, 2, 1] = geom.l_f
        m_rows[:, 2, 2] = -geom.l_r
        rhs = np.column_stack([geom.m * ax_abs, geom.m * ay_abs, geom.I_z * domega])

        dets = np.linalg.det(m_rows)
        solvable = np.abs(dets) > singular_tol
        if not np.all(solvable):
            logger.warning(
                "tire dataset: %d near-singular rows dropped in %s",
                int(np.count_nonzero(~solvable)),
                log.name or "<log>",
            )
        forces = np.full((n, 3), np.nan)
        forces[solvable] = np.linalg.solve(m_rows[solvable], rhs[solvable, :, None])[:, :, 0]
        f_x, f_yf_veh, f_yr_veh = forces[:, 0], forces[:, 1], forces[:, 2]

        # project the front axle force into the steered tire frame
        f_xf = f_x / 2.0
        f_yf_tire = np.sin(-delta) * f_xf + np.cos(-delta) * f_yf_veh

        moving = v_x > v_min
        interior = np.ones(n, dtype=bool)
        trim = 2 * (smooth_window // 2 + 1)
        interior[:trim] = False
        interior[n - trim :] = False
        keep = moving & interior & solvable & np.isfinite(f_yf_tire)
        if not np.any(keep):
            continue

        alpha_f, alpha_r = models.slip_angles(
            v_x[keep], v_y[keep], omega[keep], delta[keep], geom, normalized=normalized
        )
        front_x.append(alpha_f)
        front_y.append(f_yf_tire[keep])
        rear_x.append(alpha_r)
        rear_y.append(f_yr_veh[keep])
    if not front_x:
        raise DataError("no usable tire rows (all below v_min or logs too short)")
    front = Dataset(
        X=_column(np.concatenate(front_x)),
        Y=_column(np.concatenate(front_y)),
        x_names=("alpha_f [rad]",),
        y_names=("F_y_front [N]",),
    )
    rear = Dataset(
        X=_column(np.concatenate(rear_x)),
        Y=_column(np.concatenate(rear_y)),
        x_names=("alpha_r [rad]",),
        y_names=("F_y_rear [N]",),
    )
    return front, rear
