import pytest

from minicar.errors import DataError
from minicar.logs import save_log
from minicar.scenarios import Scenario, SineSchedule, constant
from minicar.simulator import NoiseSpec, save_trajectory, simulate, synthesize_log
from minicar.validation import one_step_rms, read_table


def _scenario(model="kinematic", duration=4.0, mocap=False, init=(), steer=None):
    return Scenario(
        name="val", duration=duration, dt=0.01, model=model,
        throttle=constant(0.3),
        steering=steer or SineSchedule(amplitude=0.4, frequency=0.3),
        initial_state=init, mocap=mocap,
    )


def test_kinematic_self_validation_is_exact(ref, tmp_path):
    scen = _scenario(mocap=True)
    log = synthesize_log(scen, ref, NoiseSpec(seed=0))
    path = tmp_path / "log.csv"
    save_log(log, path)
    rms = one_step_rms(read_table(path), ref, "kinematic")
    assert set(rms) == {"x", "y", "eta", "v"}
    for channel, value in rms.items():
        assert value < 1e-6, channel


def test_dynamic_self_validation_on_trajectory_export(ref, tmp_path):
    scen = _scenario(model="dynamic", init=(0, 0, 0, 0.5, 0, 0))
    traj = simulate(scen, ref)
    path = tmp_path / "traj.csv"
    save_trajectory(traj, ref, path)
    rms = one_step_rms(read_table(path), ref, "dynamic")
    assert set(rms) == {"x", "y", "eta", "v_x", "v_y", "omega"}
    for channel, value in rms.items():
        assert value < 1e-6, channel


def test_kinematic_without_pose_reports_speed_only(ref, tmp_path):
    log = synthesize_log(_scenario(), ref, NoiseSpec(seed=0))
    path = tmp_path / "log.csv"
    save_log(log, path)
    rms = one_step_rms(read_table(path), ref, "kinematic")
    assert set(rms) == {"v"}
    assert rms["v"] < 1e-6


def test_dynamic_validation_requires_pose(ref, tmp_path):
    log = synthesize_log(_scenario(), ref, NoiseSpec(seed=0))
    path = tmp_path / "log.csv"
    save_log(log, path)
    with pytest.raises(DataError, match="pose"):
        one_step_rms(read_table(path), ref, "dynamic")


def test_dynamic_validation_reconstructs_lateral_velocity(ref, tmp_path):
    scen = _scenario(model="dynamic", duration=6.0, mocap=True, init=(0, 0, 0, 0.5, 0, 0))
    log = synthesize_log(scen, ref, NoiseSpec(seed=0))
    path = tmp_path / "log.csv"
    save_log(log, path)
    rms = one_step_rms(read_table(path), ref, "dynamic")
    # reconstruction by differentiation bounds the attainable accuracy
    assert rms["v_y"] < 5e-3
    assert rms["x"] < 1e-4


def test_kinematic_error_grows_with_speed_on_dynamic_logs(ref, tmp_path):
    """The kinematic model's lateral-channel error on circular
    dynamic-model logs grows as the speed rises."""
    results = {}
    for name, tau in (("slow", 0.22), ("fast", 0.3)):
        scen = Scenario(
            name=name, duration=8.0, dt=0.01, model="dynamic",
            throttle=constant(tau), steering=constant(0.35),
            initial_state=(0, 0, 0, 0.4, 0, 0),
        )
        traj = simulate(scen, ref)
        path = tmp_path / f"{name}.csv"
        save_trajectory(traj, ref, path)
        results[name] = one_step_rms(read_table(path), ref, "kinematic")
    assert results["fast"]["eta"] > results["slow"]["eta"]
    assert results["fast"]["y"] > results["slow"]["y"]


def test_validation_rejects_unknown_model(ref, tmp_path):
    log = synthesize_log(_scenario(), ref, NoiseSpec(seed=0))
    path = tmp_path / "log.csv"
    save_log(log, path)
    from minicar.errors import ConfigError

    with pytest.raises(ConfigError):
        one_step_rms(read_table(path), ref, "unicycle")


def test_read_table_errors(tmp_path):
    from minicar.errors import ParseError

    path = tmp_path / "bad.csv"
    path.write_text("t,v\n0.0\n")
    with pytest.raises(ParseError, match="row 1"):
        read_table(path)
