import numpy as np
import pytest
from scipy.optimize import brentq

from minicar import models, simulator
from minicar.delay import estimate_delay_xcorr
from minicar.errors import ConfigError, SimulationDiverged
from minicar.scenarios import (
    PiecewiseSchedule,
    Scenario,
    SineSchedule,
    constant,
    sinusoidal_steering,
)
from minicar.simulator import DelayLine, NoiseSpec, simulate, synthesize_log


# --- DelayLine -------------------------------------------------------------


def test_delay_line_zero_is_passthrough():
    line = DelayLine(0.0, 0.01)
    assert line.push_pop(0.7) == 0.7
    assert line.realized_delay == 0.0


def test_delay_line_shifts_by_whole_steps(rng):
    line = DelayLine(0.15, 0.01, fill=0.0)
    x = rng.normal(size=100)
    out = np.array([line.push_pop(v) for v in x])
    np.testing.assert_array_equal(out[15:], x[:-15])


def test_delay_line_fill_until_primed():
    line = DelayLine(0.05, 0.01, fill=-0.2)
    out = [line.push_pop(1.0) for _ in range(10)]
    assert out[:5] == [-0.2] * 5
    assert out[5:] == [1.0] * 5


def test_delay_line_reports_realized_delay():
    line = DelayLine(0.014, 0.01)
    assert line.length == 1
    assert line.realized_delay == pytest.approx(0.01)


def test_delay_line_rejects_negative():
    with pytest.raises(ConfigError):
        DelayLine(-0.1, 0.01)


# --- simulate ----------------------------------------------------------------


def _scenario(throttle, steering, duration=5.0, model="kinematic", dt=0.01, init=()):
    return Scenario(
        name="t", duration=duration, dt=dt, model=model,
        throttle=throttle, steering=steering, initial_state=init,
    )


def test_zero_input_stays_at_rest(ref):
    # stationary up to the femtonewton leak of the smooth throttle gate
    traj = simulate(_scenario(constant(0.0), constant(0.0)), ref)
    np.testing.assert_allclose(traj.states, 0.0, atol=1e-9)


def test_step_throttle_approaches_force_balance_speed(ref):
    """Terminal speed matches the root of motor + friction force found
    by an independent scalar root-finder."""
    tau = 0.2
    traj = simulate(_scenario(constant(tau), constant(0.0), duration=8.0), ref)
    v = traj.states[:, 3]
    assert np.all(np.diff(v) >= -1e-12)  # monotone rise

    balance = lambda vv: float(
        models.motor_force(tau, vv, ref.motor) + models.friction_force(vv, ref.friction)
    )
    v_terminal = brentq(balance, 1e-9, 10.0, xtol=1e-12)
    assert v[-1] == pytest.approx(v_terminal, rel=0.01)


def test_sinusoidal_steering_lags_by_configured_delay(ref):
    traj = simulate(sinusoidal_steering(), ref)
    est = estimate_delay_xcorr(traj.commanded_s, traj.applied_s, traj.dt)
    assert est == pytest.approx(ref.delays.steer_delay, abs=traj.dt)


def test_coasting_speed_never_increases(ref):
    scen = _scenario(constant(0.0), constant(0.0), init=(0, 0, 0, 2.0))
    traj = simulate(scen, ref)
    assert np.all(np.diff(traj.states[:, 3]) <= 1e-12)


def test_simulation_is_deterministic(ref):
    scen = _scenario(SineSchedule(amplitude=0.5, frequency=0.4), constant(0.3), duration=3.0)
    a = simulate(scen, ref)
    b = simulate(scen, ref)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.applied_s, b.applied_s)


def test_divergence_guard_attaches_partial_trajectory(ref, monkeypatch):
    monkeypatch.setattr(simulator, "DIVERGENCE_LIMIT", 0.5)
    scen = _scenario(constant(0.4), constant(0.0), duration=8.0)
    with pytest.raises(SimulationDiverged) as err:
        simulate(scen, ref)
    partial = err.value.trajectory
    assert partial is not None and len(partial) >= 1
    assert err.value.t > 0


def test_trajectory_arrays_read_only(ref):
    traj = simulate(_scenario(constant(0.2), constant(0.0), duration=1.0), ref)
    with pytest.raises(ValueError):
        traj.states[0, 0] = 99.0


def test_dynamic_blend_below_threshold_matches_kinematic(ref):
    """In normalized-slip mode below the blend speed the dynamic
    simulation propagates kinematically."""
    s_cmd = 0.3
    kin = simulate(
        _scenario(constant(0.2), constant(s_cmd), duration=4.0, init=(0, 0, 0, 0.2)), ref
    )
    dyn = simulate(
        _scenario(constant(0.2), constant(s_cmd), duration=4.0, model="dynamic",
                  init=(0, 0, 0, 0.2, 0, 0)),
        ref, normalized=True,
    )
    # terminal speed for tau=0.2 is ~0.085 m/s, well under the blend speed
    np.testing.assert_allclose(dyn.states[:, :4], kin.states, atol=1e-12)


# --- synthesize_log ----------------------------------------------------------


def test_zero_noise_log_equals_trajectory(ref):
    scen = _scenario(constant(0.3), constant(0.1), duration=2.0)
    traj = simulate(scen, ref)
    log = synthesize_log(scen, ref, NoiseSpec(seed=5))
    np.testing.assert_array_equal(log.v_enc, traj.states[:, 3])
    np.testing.assert_array_equal(log.tau, traj.commanded_tau)
    omega = simulator.trajectory_yaw_rate(traj, ref)
    np.testing.assert_array_equal(log.omega_imu, omega)
    assert log.mocap is None


def test_same_seed_same_log(ref):
    scen = _scenario(constant(0.3), constant(0.1), duration=2.0)
    spec = NoiseSpec(seed=42, v_enc=0.02, omega_imu=0.01)
    a = synthesize_log(scen, ref, spec)
    b = synthesize_log(scen, ref, spec)
    np.testing.assert_array_equal(a.v_enc, b.v_enc)
    np.testing.assert_array_equal(a.omega_imu, b.omega_imu)


def test_different_seed_differs(ref):
    scen = _scenario(constant(0.3), constant(0.1), duration=2.0)
    a = synthesize_log(scen, ref, NoiseSpec(seed=1, v_enc=0.02))
    b = synthesize_log(scen, ref, NoiseSpec(seed=2, v_enc=0.02))
    assert not np.array_equal(a.v_enc, b.v_enc)


def test_mocap_block_present_when_requested(ref):
    scen = Scenario(
        name="m", duration=1.0, dt=0.01, model="kinematic",
        throttle=constant(0.3), steering=constant(0.0), mocap=True,
    )
    log = synthesize_log(scen, ref, NoiseSpec(seed=0, mocap_xy=0.001))
    assert log.mocap is not None
    assert log.mocap.x_t.size == len(log)


def test_noise_spec_rejects_negative_std():
    with pytest.raises(ConfigError):
        NoiseSpec(seed=1, v_enc=-0.1)


# --- trajectory CSV -----------------------------------------------------------


def test_trajectory_csv_round_trip_columns(ref, tmp_path):
    from minicar.validation import read_table

    scen = _scenario(constant(0.3), constant(0.2), duration=1.0)
    traj = simulate(scen, ref)
    path = tmp_path / "traj.csv"
    simulator.save_trajectory(traj, ref, path)
    table = read_table(path)
    assert set(table) == {"t", "tau", "s", "v_enc", "omega_imu",
                          "tau_applied", "s_applied", "x", "y", "eta", "v"}
    np.testing.assert_array_equal(table["v"], traj.states[:, 3])
    np.testing.assert_array_equal(table["s_applied"], traj.applied_s)
