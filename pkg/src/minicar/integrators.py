"""Fixed-step ODE integration."""

from __future__ import annotations

import numpy as np

from .errors import IntegrationError


def rk4_step(rhs, state, dt: float, t: float = 0.0) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of ``dt`` seconds.

    ``rhs`` sees only the state; inputs are held constant over the step
    (zero-order hold), matching discrete command transmission on the
    robot. ``t`` is used for diagnostics only.
    """
    if dt <= 0:
        raise IntegrationError(f"dt must be positive, got {dt}")
    y = np.asarray(state, dtype=float)
    k1 = np.asarray(rhs(y))
    k2 = np.asarray(rhs(y + 0.5 * dt * k1))
    k3 = np.asarray(rhs(y + 0.5 * dt * k2))
    k4 = np.asarray(rhs(y + dt * k3))
    if not (
        np.all(np.isfinite(k1))
        and np.all(np.isfinite(k2))
        and np.all(np.isfinite(k3))
        and np.all(np.isfinite(k4))
    ):
        raise IntegrationError(f"non-finite derivative at t={t:.6f} s")
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
