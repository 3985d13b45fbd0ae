"""Actuation-delay estimation by cross correlation."""

from __future__ import annotations

import numpy as np

from .errors import DataError

# Physical actuation delays are non-negative and well under half a
# second on servo-class hardware, so the search stops there.
MAX_LAG_S = 0.5


def estimate_delay_xcorr(command, measured, dt: float, *, max_lag: float = MAX_LAG_S) -> float:
    """Delay (in seconds) of ``measured`` behind ``command``.

    Returns the non-negative lag that maximizes the normalized cross
    correlation between the demeaned series. Restricting the search to
    lags in [0, max_lag] avoids picking an aliased peak one period away
    when the excitation is periodic.
    """
    command = np.asarray(command, dtype=float)
    measured = np.asarray(measured, dtype=float)
    if command.shape != measured.shape:
        raise DataError("command and measured series must have equal length")
    n = command.size
    if n < 10:
        raise DataError(f"need at least 10 samples to estimate a delay, got {n}")
    if dt <= 0:
        raise DataError("dt must be positive")

    c = command - command.mean()
    m = measured - measured.mean()
    c_norm = float(np.sqrt(np.dot(c, c)))
    m_norm = float(np.sqrt(np.dot(m, m)))
    if c_norm == 0.0 or m_norm == 0.0:
        raise DataError("correlation undefined for a zero-variance series")

    max_shift = min(n - 2, int(round(max_lag / dt)))
    scores = np.empty(max_shift + 1)
    for k in range(max_shift + 1):
        scores[k] = np.dot(c[: n - k], m[k:]) / (c_norm * m_norm)
    return int(np.argmax(scores)) * dt
