"""Scenario simulation with actuation delays and log synthesis.

Per step: sample the schedules, push the commands through the steering
and longitudinal delay lines, map the delayed steering command to a
road-wheel angle, then advance one RK4 step with the commands frozen
(zero-order hold). The net longitudinal force is re-evaluated from the
motor and friction curves inside every RK4 stage, since it depends on
the evolving speed. Both the commanded and the applied input series
are recorded.

The dynamic model can run with either slip-angle convention. The
default raw-velocity form is regular at standstill and needs no special
casing; the normalized form is singular as v_x -> 0, so below a blend
speed the simulator falls back to kinematic propagation and pins
(v_y, omega) to their rigid-rolling values.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import models
from .errors import ConfigError, SimulationDiverged
from .integrators import rk4_step
from .logs import MocapBlock, RawLog
from .params import VehicleParams
from .scenarios import Scenario

# Any state component beyond this magnitude aborts the run: parameter
# sets that unstable are diagnosed faster by failing than by NaNs.
DIVERGENCE_LIMIT = 1e6

# v_x under which normalized-slip dynamics hand over to the kinematic
# model (the raw-velocity form never blends).
BLEND_SPEED = 0.3


class DelayLine:
    """Fixed ring buffer that delays a command stream by whole steps.

    The requested delay is rounded to the nearest integer number of
    steps; ``realized_delay`` reports what actually applies. Until the
    buffer first fills, the fill value is returned.
    """

    def __init__(self, delay: float, dt: float, fill: float = 0.0):
        if delay < 0 or dt <= 0:
            raise ConfigError("delay must be >= 0 and dt > 0")
        self.length = int(round(delay / dt))
        self.realized_delay = self.length * dt
        self.fill = fill
        self._buffer = deque([fill] * self.length)

    def push_pop(self, command: float) -> float:
        if self.length == 0:
            return command
        self._buffer.append(command)
        return self._buffer.popleft()


@dataclass(frozen=True)
class NoiseSpec:
    """Per-channel additive Gaussian noise levels; the seed is mandatory."""

    seed: int
    v_enc: float = 0.0
    omega_imu: float = 0.0
    mocap_xy: float = 0.0
    mocap_eta: float = 0.0

    def __post_init__(self):
        for name in ("v_enc", "omega_imu", "mocap_xy", "mocap_eta"):
            if getattr(self, name) < 0:
                raise ConfigError(f"noise std {name} must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    """Simulated state and input history on a uniform grid."""

    model: str
    t: np.ndarray
    states: np.ndarray  # (N, 4) kinematic or (N, 6) dynamic
    commanded_tau: np.ndarray
    commanded_s: np.ndarray
    applied_tau: np.ndarray
    applied_s: np.ndarray

    def __post_init__(self):
        n = self.t.size
        for a in (
            self.states,
            self.commanded_tau,
            self.commanded_s,
            self.applied_tau,
            self.applied_s,
        ):
            if a.shape[0] != n:
                raise ConfigError("trajectory series must share one length")
            a.setflags(write=False)
        self.t.setflags(write=False)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def state_names(self) -> tuple[str, ...]:
        return (
            models.KINEMATIC_STATE_NAMES
            if self.model == "kinematic"
            else models.DYNAMIC_STATE_NAMES
        )


def _kinematic_rolling(v_x: float, delta: float, geom) -> tuple[float, float]:
    """(v_y, omega) of a rigidly rolling bicycle at the CoM."""
    omega = v_x * np.tan(delta) / geom.l
    return omega * geom.l_r, omega


def simulate(scenario: Scenario, params: VehicleParams, *, normalized: bool = False,
             blend_speed: float = BLEND_SPEED) -> Trajectory:
    """Integrate a scenario and record states plus both input series."""
    times = scenario.times
    tau_cmd, s_cmd = scenario.sample_inputs()
    dt = scenario.dt
    geom = params.geometry
    kinematic = scenario.model == "kinematic"

    steer_line = DelayLine(params.delays.steer_delay, dt, fill=float(s_cmd[0]))
    long_line = DelayLine(params.delays.long_delay, dt, fill=float(tau_cmd[0]))

    n = times.size
    states = np.empty((n, 4 if kinematic else 6))
    states[0] = scenario.initial_state
    tau_app = np.empty(n)
    s_app = np.empty(n)

    def partial(k: int) -> Trajectory:
        return Trajectory(
            model=scenario.model,
            t=times[:k].copy(),
            states=states[:k].copy(),
            commanded_tau=tau_cmd[:k].copy(),
            commanded_s=s_cmd[:k].copy(),
            applied_tau=tau_app[:k].copy(),
            applied_s=s_app[:k].copy(),
        )

    for k in range(n):
        tau_k = long_line.push_pop(float(tau_cmd[k]))
        s_k = steer_line.push_pop(float(s_cmd[k]))
        tau_app[k] = tau_k
        s_app[k] = s_k
        if k == n - 1:
            break

        state = states[k]
        delta = float(models.steering_angle(s_k, params.steering))

        def net_force(v_long):
            # v (kinematic) and v_x (dynamic) share state slot 3
            return models.motor_force(tau_k, v_long, params.motor) + models.friction_force(
                v_long, params.friction
            )

        if kinematic:
            nxt = rk4_step(
                lambda y: models.kinematic_rhs(y, delta, net_force(y[3]), geom),
                state, dt, t=float(times[k]),
            )
        elif normalized and state[3] < blend_speed:
            # kinematic fallback where the normalized slip form is singular
            kin = rk4_step(
                lambda y: models.kinematic_rhs(y, delta, net_force(y[3]), geom),
                state[:4], dt, t=float(times[k]),
            )
            v_y, omega = _kinematic_rolling(kin[3], delta, geom)
            nxt = np.array([kin[0], kin[1], kin[2], kin[3], v_y, omega])
        else:
            nxt = rk4_step(
                lambda y: models.dynamic_rhs(y, delta, net_force(y[3]), params,
                                             normalized=normalized),
                state, dt, t=float(times[k]),
            )

        if not np.all(np.isfinite(nxt)) or np.any(np.abs(nxt) > DIVERGENCE_LIMIT):
            raise SimulationDiverged(
                f"state left the sane envelope in scenario {scenario.name!r}",
                t=float(times[k + 1]),
                trajectory=partial(k + 1),
            )
        states[k + 1] = nxt

    return Trajectory(
        model=scenario.model,
        t=times,
        states=states,
        commanded_tau=tau_cmd,
        commanded_s=s_cmd,
        applied_tau=tau_app,
        applied_s=s_app,
    )


def trajectory_yaw_rate(traj: Trajectory, params: VehicleParams) -> np.ndarray:
    """The yaw rate an IMU would report along a trajectory."""
    if traj.model == "dynamic":
        return traj.states[:, 5].copy()
    delta = models.steering_angle(traj.applied_s, params.steering)
    return traj.states[:, 3] * np.tan(delta) / params.geometry.l


def synthesize_log(scenario: Scenario, params: VehicleParams, noise: NoiseSpec,
                   *, normalized: bool = False) -> RawLog:
    """Simulate a scenario and emit the RawLog a real robot would record.

    Commanded (pre-delay) inputs are logged; sensor channels get
    additive seeded Gaussian noise. The pose block is included only
    when the scenario asks for motion capture.
    """
    traj = simulate(scenario, params, normalized=normalized)
    rng = np.random.default_rng(noise.seed)
    n = len(traj)

    v = traj.states[:, 3].copy()
    omega = trajectory_yaw_rate(traj, params)
    if noise.v_enc:
        v = v + rng.normal(0.0, noise.v_enc, n)
    if noise.omega_imu:
        omega = omega + rng.normal(0.0, noise.omega_imu, n)

    mocap = None
    if scenario.mocap:
        x = traj.states[:, 0].copy()
        y = traj.states[:, 1].copy()
        eta = traj.states[:, 2].copy()
        if noise.mocap_xy:
            x = x + rng.normal(0.0, noise.mocap_xy, n)
            y = y + rng.normal(0.0, noise.mocap_xy, n)
        if noise.mocap_eta:
            eta = eta + rng.normal(0.0, noise.mocap_eta, n)
        mocap = MocapBlock(x_t=x, y_t=y, eta_t=eta)

    return RawLog(
        t=traj.t.copy(),
        tau=traj.commanded_tau.copy(),
        s=traj.commanded_s.copy(),
        v_enc=v,
        omega_imu=omega,
        mocap=mocap,
        name=scenario.name,
    )


def _format_float(x: float) -> str:
    return repr(float(x))


def trajectory_to_csv(traj: Trajectory, params: VehicleParams) -> str:
    """Trajectory as CSV: the RawLog dialect extended with state columns."""
    omega = trajectory_yaw_rate(traj, params)
    header = ["t", "tau", "s", "v_enc", "omega_imu", "tau_applied", "s_applied"]
    header += list(traj.state_names)
    columns = [
        traj.t,
        traj.commanded_tau,
        traj.commanded_s,
        traj.states[:, 3],
        omega,
        traj.applied_tau,
        traj.applied_s,
    ] + [traj.states[:, i] for i in range(traj.states.shape[1])]
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_format_float(x) for x in row))
    return "\n".join(lines) + "\n"


def save_trajectory(traj: Trajectory, params: VehicleParams, path: str | Path) -> None:
    Path(path).write_text(trajectory_to_csv(traj, params), encoding="utf-8")
