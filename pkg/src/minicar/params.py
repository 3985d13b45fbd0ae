"""Vehicle parameter groups and their JSON round-trip.

All values are SI unless noted. Throttle and steering inputs are
dimensionless commands in [-1, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError

PARAMS_SCHEMA_VERSION = 1


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class FrictionParams:
    """Rolling/drag resistance curve F = -(a*tanh(b*v) + v*c)."""

    a: float  # force scale [N]
    b: float  # velocity sharpness [s/m]
    c: float  # viscous coefficient [N*s/m]

    def __post_init__(self):
        _require(_finite(self.a, self.b, self.c), "friction params must be finite")
        _require(self.a > 0, "friction a must be > 0")
        _require(self.b > 0, "friction b must be > 0")
        _require(self.c >= 0, "friction c must be >= 0")


@dataclass(frozen=True)
class MotorParams:
    """Brushed-motor curve F = (d - v*e) * relu-like(tau + g)."""

    d: float  # stall-force scale [N]
    e: float  # back-EMF slope [N*s/m]
    g: float  # throttle dead-zone offset, in (-1, 0]

    def __post_init__(self):
        _require(_finite(self.d, self.e, self.g), "motor params must be finite")
        _require(self.d > 0, "motor d must be > 0")
        _require(self.e > 0, "motor e must be > 0")
        _require(-1 < self.g <= 0, "motor g must lie in (-1, 0]")


@dataclass(frozen=True)
class SteeringParams:
    """Input-to-angle map built from two blended tanh branches.

    The weighting lets left and right steering have different gain and
    saturation, which is typical for a servo-driven linkage.
    """

    a_t: float  # left-branch angle scale [rad]
    b_t: float  # left-branch input gain
    c_t: float  # input offset
    d_t: float  # right-branch angle scale [rad]
    e_t: float  # right-branch input gain

    def __post_init__(self):
        _require(
            _finite(self.a_t, self.b_t, self.c_t, self.d_t, self.e_t),
            "steering params must be finite",
        )
        _require(self.a_t > 0 and self.d_t > 0, "steering angle scales must be > 0")
        _require(self.b_t > 0 and self.e_t > 0, "steering input gains must be > 0")
        _require(abs(self.c_t) < 1, "steering offset must satisfy |c_t| < 1")


@dataclass(frozen=True)
class TireParams:
    """Front magic-formula lateral curve plus linear rear coefficient."""

    D: float  # peak force [N]
    C: float  # shape factor
    B: float  # stiffness factor [1/rad]
    E: float  # curvature factor
    C_r: float  # rear cornering coefficient [N/rad]

    def __post_init__(self):
        _require(
            _finite(self.D, self.C, self.B, self.E, self.C_r),
            "tire params must be finite",
        )
        _require(self.D > 0, "tire D must be > 0")
        _require(self.C > 0, "tire C must be > 0")
        _require(self.B > 0, "tire B must be > 0")
        _require(self.C_r > 0, "tire C_r must be > 0")


@dataclass(frozen=True)
class Geometry:
    """Mass and dimensions of the robot."""

    m: float  # mass [kg]
    l: float  # wheelbase [m]
    l_f: float  # CoM to front axle [m]
    l_r: float  # CoM to rear axle [m]
    w: float  # width [m]
    I_z: float  # yaw inertia [kg*m^2]

    def __post_init__(self):
        _require(
            _finite(self.m, self.l, self.l_f, self.l_r, self.w, self.I_z),
            "geometry must be finite",
        )
        _require(self.m > 0, "mass must be > 0")
        _require(self.w > 0, "width must be > 0")
        _require(self.I_z > 0, "yaw inertia must be > 0")
        _require(self.l > 0 and self.l_f >= 0 and self.l_r >= 0, "lengths must be positive")
        _require(
            abs(self.l - (self.l_f + self.l_r)) < 1e-9,
            "wheelbase must equal l_f + l_r",
        )


@dataclass(frozen=True)
class Delays:
    """Actuation delays between command and response."""

    steer_delay: float = 0.0  # [s]
    long_delay: float = 0.0  # [s]

    def __post_init__(self):
        _require(_finite(self.steer_delay, self.long_delay), "delays must be finite")
        _require(0 <= self.steer_delay < 1, "steer delay must lie in [0, 1) s")
        _require(0 <= self.long_delay < 1, "longitudinal delay must lie in [0, 1) s")


@dataclass(frozen=True)
class VehicleParams:
    """Complete fitted parameter set for one vehicle.

    ``tire`` may be None when no lateral-force identification has been
    run; the dynamic model refuses to evaluate in that case.
    """

    friction: FrictionParams
    motor: MotorParams
    steering: SteeringParams
    geometry: Geometry
    delays: Delays = field(default_factory=Delays)
    tire: TireParams | None = None


@dataclass(frozen=True)
class ControlInput:
    """Normalized throttle and steering command pair."""

    tau: float
    s: float

    def __post_init__(self):
        _require(_finite(self.tau, self.s), "inputs must be finite")
        _require(-1 <= self.tau <= 1, "throttle must lie in [-1, 1]")
        _require(-1 <= self.s <= 1, "steering input must lie in [-1, 1]")


_GROUPS = {
    "friction": FrictionParams,
    "motor": MotorParams,
    "steering": SteeringParams,
    "tire": TireParams,
    "geometry": Geometry,
    "delays": Delays,
}


def params_to_dict(params: VehicleParams) -> dict:
    doc: dict = {"schema_version": PARAMS_SCHEMA_VERSION}
    for name in _GROUPS:
        group = getattr(params, name)
        doc[name] = None if group is None else asdict(group)
    return doc


def params_from_dict(doc: dict) -> VehicleParams:
    version = doc.get("schema_version")
    if version != PARAMS_SCHEMA_VERSION:
        raise ConfigError(f"unsupported parameter schema_version: {version!r}")
    kwargs = {}
    for name, cls in _GROUPS.items():
        group = doc.get(name)
        if group is None:
            if name != "tire":
                raise ConfigError(f"parameter group '{name}' is required")
            kwargs[name] = None
        else:
            try:
                kwargs[name] = cls(**group)
            except TypeError as exc:
                raise ConfigError(f"bad fields in parameter group '{name}': {exc}") from exc
    return VehicleParams(**kwargs)


def save_params(params: VehicleParams, path: str | Path) -> None:
    Path(path).write_text(json.dumps(params_to_dict(params), indent=2) + "\n")


def load_params(path: str | Path) -> VehicleParams:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid parameter JSON in {path}: {exc}") from exc
    return params_from_dict(doc)


def reference_params() -> VehicleParams:
    """Parameter set identified on the reference 1:10 platform.

    Useful as a simulation default and as the ground truth for the
    synthetic round-trip test suite. The wheelbase is 0.192 m and the
    center of mass is assumed to sit midway between the axles; yaw
    inertia follows the uniform-rectangle approximation.
    """
    m, l, w = 1.67, 0.192, 0.1
    return VehicleParams(
        friction=FrictionParams(a=1.72, b=13.32, c=0.29),
        motor=MotorParams(d=28.88, e=5.99, g=-0.15),
        steering=SteeringParams(a_t=1.64, b_t=0.33, c_t=0.02, d_t=1.66, e_t=0.38),
        tire=TireParams(D=2.98, C=0.69, B=0.29, E=-3.07, C_r=0.39),
        geometry=Geometry(m=m, l=l, l_f=l / 2, l_r=l / 2, w=w, I_z=m * (l * l + w * w) / 12),
        delays=Delays(steer_delay=0.15, long_delay=0.01),
    )
