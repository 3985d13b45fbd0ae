"""Raw driving logs and their CSV representation.

A log is one uniform-rate recording from the robot: commanded inputs,
encoder speed, IMU yaw rate and, when an external tracking system was
running, the global pose. CSV schema (header required)::

    t,tau,s,v_enc,omega_imu[,x_t,y_t,eta_t]

UTF-8, '.' decimal separator, SI units, one row per sample. Row
numbers in parse errors are 1-based over data rows (the header does
not count).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError

REQUIRED_COLUMNS = ("t", "tau", "s", "v_enc", "omega_imu")
MOCAP_COLUMNS = ("x_t", "y_t", "eta_t")


def _format_float(x: float) -> str:
    # repr round-trips float64 exactly, keeping emitted files
    # byte-stable and re-readable without precision loss
    return repr(float(x))


@dataclass(frozen=True)
class MocapBlock:
    """Globally referenced pose track from an external tracking system."""

    x_t: np.ndarray
    y_t: np.ndarray
    eta_t: np.ndarray


@dataclass(frozen=True)
class RawLog:
    """Time-stamped sensor and command series as recorded on the robot."""

    t: np.ndarray
    tau: np.ndarray
    s: np.ndarray
    v_enc: np.ndarray
    omega_imu: np.ndarray
    mocap: MocapBlock | None = None
    name: str = ""

    def __post_init__(self):
        arrays = [self.t, self.tau, self.s, self.v_enc, self.omega_imu]
        if self.mocap is not None:
            arrays += [self.mocap.x_t, self.mocap.y_t, self.mocap.eta_t]
        n = self.t.size
        if any(a.size != n for a in arrays):
            raise ParseError("all log columns must have equal length")
        if n >= 2 and np.any(np.diff(self.t) <= 0):
            bad = int(np.argmax(np.diff(self.t) <= 0)) + 1
            raise ParseError("time must be strictly increasing", row=bad + 1)
        if np.any(np.abs(self.tau) > 1 + 1e-9) or np.any(np.abs(self.s) > 1 + 1e-9):
            bad = int(np.argmax((np.abs(self.tau) > 1 + 1e-9) | (np.abs(self.s) > 1 + 1e-9)))
            raise ParseError("throttle and steering must lie in [-1, 1]", row=bad + 1)
        for a in arrays:
            a.setflags(write=False)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def dt(self) -> float:
        if len(self) < 2:
            raise ParseError("log too short to define a sample period")
        return float(np.median(np.diff(self.t)))


def load_log(source, name: str = "") -> RawLog:
    """Parse a RawLog from a path, text or binary stream.

    Raises ParseError with a 1-based row number for malformed rows,
    non-monotone time or out-of-range inputs.
    """
    if isinstance(source, (str, Path)):
        name = name or str(source)
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, io.TextIOBase):
        text = source.read()
    else:  # binary stream
        text = source.read().decode("utf-8")

    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"empty log {name or '<stream>'}")
    header = [h.strip() for h in lines[0].split(",")]
    if tuple(header[: len(REQUIRED_COLUMNS)]) != REQUIRED_COLUMNS:
        raise ParseError(
            f"expected header starting with {','.join(REQUIRED_COLUMNS)}, got {lines[0]!r}"
        )
    extras = tuple(header[len(REQUIRED_COLUMNS) :])
    if extras not in ((), MOCAP_COLUMNS):
        raise ParseError(f"unrecognized extra columns {extras}")
    has_mocap = extras == MOCAP_COLUMNS

    rows = []
    for i, line in enumerate(lines[1:], start=1):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(parts)}", row=i)
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"non-numeric field: {exc}", row=i) from exc
    if not rows:
        raise ParseError(f"log {name or '<stream>'} has a header but no samples")

    data = np.asarray(rows, dtype=float)
    mocap = MocapBlock(x_t=data[:, 5], y_t=data[:, 6], eta_t=data[:, 7]) if has_mocap else None
    return RawLog(
        t=data[:, 0],
        tau=data[:, 1],
        s=data[:, 2],
        v_enc=data[:, 3],
        omega_imu=data[:, 4],
        mocap=mocap,
        name=name,
    )


def dump_log(log: RawLog) -> str:
    """Serialize a RawLog back to its CSV text form."""
    columns = [log.t, log.tau, log.s, log.v_enc, log.omega_imu]
    header = list(REQUIRED_COLUMNS)
    if log.mocap is not None:
        columns += [log.mocap.x_t, log.mocap.y_t, log.mocap.eta_t]
        header += list(MOCAP_COLUMNS)
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_format_float(x) for x in row))
    return "\n".join(lines) + "\n"


def save_log(log: RawLog, path: str | Path) -> None:
    Path(path).write_text(dump_log(log), encoding="utf-8")
