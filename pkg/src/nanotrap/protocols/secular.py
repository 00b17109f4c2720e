"""Classical check of the secular (time-averaged) trap frequency.

In units of the drive phase tau = w_ac t the ion obeys the Mathieu
equation x'' + (q_M / 2) cos(tau) x = 0, whose lowest-order secular
frequency is q_M w_ac / (2 sqrt 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from ..coupling import mathieu_q, trap_frequency
from ..params import DeviceParams, IonParams

__all__ = ["SecularResult", "floquet_half_trace", "classical_secular_check", "drive_scale_for_q", "Q_EDGE"]

Q_EDGE = 0.908046  # first stability boundary at a = 0
Q_ACCURATE = 0.4
DIVERGED = 1e12


def _rhs(q):
    return lambda t, y: (y[1], -0.5 * q * math.cos(t) * y[0])


def floquet_half_trace(q: float) -> float:
    """Half-trace of the one-period monodromy matrix; |.| < 1 means stable."""
    cols = []
    for y0 in ((1.0, 0.0), (0.0, 1.0)):
        sol = solve_ivp(_rhs(q), (0, 2 * math.pi), y0, method="DOP853", rtol=1e-12, atol=1e-14)
        cols.append(sol.y[:, -1])
    return 0.5 * (cols[0][0] + cols[1][1])


@dataclass(frozen=True)
class SecularResult:
    q_M: float
    omega_predicted: float  # rad/s
    omega_measured: float | None  # rad/s
    rel_error: float | None
    stability_flag: str  # "stable" | "marginal" | "unstable" | "none"
    floquet_stable: bool
    diverged: bool
    times: np.ndarray  # s
    x: np.ndarray  # relative displacement
    freqs: np.ndarray  # rad/s
    spectrum: np.ndarray


def _flag(q, stable):
    if q == 0:
        return "none"
    if stable:
        return "stable" if q <= Q_ACCURATE else "marginal"
    return "marginal" if q <= 1.2 * Q_EDGE else "unstable"


def drive_scale_for_q(params: DeviceParams, ion: IonParams, q_target: float) -> float:
    return q_target / mathieu_q(params, ion)


def _peak(freqs, mag, mask):
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return None, 0.0
    k = idx[np.argmax(mag[idx])]
    if 0 < k < len(mag) - 1 and mag[k - 1] > 0 and mag[k + 1] > 0:
        a, b, c = np.log(mag[k - 1 : k + 2])
        den = a - 2 * b + c
        shift = 0.5 * (a - c) / den if den != 0 else 0.0
    else:
        shift = 0.0
    df = freqs[1] - freqs[0]
    return freqs[k] + shift * df, mag[k]


def classical_secular_check(
    params: DeviceParams,
    ion: IonParams,
    drive_scale: float = 1.0,
    periods: int = 400,
    samples_per_period: int = 64,
) -> SecularResult:
    """Integrate the driven classical motion and read off the secular line."""
    if periods < 200:
        raise ValueError("need at least 200 drive periods")
    if drive_scale < 0:
        raise ValueError("drive_scale must be non-negative")
    scaled = replace(params, drive_voltage=params.drive_voltage * drive_scale)
    w_ac = params.drive_freq
    q = mathieu_q(scaled, ion)
    w_pred = trap_frequency(scaled, ion)

    n = periods * samples_per_period
    tau = np.arange(n) * (2 * math.pi / samples_per_period)
    stable = abs(floquet_half_trace(q)) < 1 if q > 0 else True
    if q == 0:
        x = np.ones(n)
        diverged = False
    else:
        def blowup(t, y):
            return abs(y[0]) - DIVERGED

        blowup.terminal = True
        sol = solve_ivp(
            _rhs(q), (0, tau[-1]), (1.0, 0.0), t_eval=tau, method="DOP853", rtol=1e-10, atol=1e-12, events=blowup
        )
        x = sol.y[0]
        diverged = bool(sol.status != 0 or len(x) < n or not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGED)
        # an unstable orbit stops early; analyse the stretch that was integrated
        n = len(x)
        tau = tau[:n]

    win = np.hanning(n)
    mag = np.abs(np.fft.rfft((x - x.mean()) * win))
    ratio = np.fft.rfftfreq(n, d=1.0 / samples_per_period)  # in units of w_ac
    freqs = ratio * w_ac
    # skip the DC leakage bins and notch out the drive line and everything above
    mask = (np.arange(len(mag)) >= 2) & (ratio < 1 - 0.05)
    w_meas, height = _peak(freqs, mag, mask)
    flag = _flag(q, stable)
    # a runaway orbit has no meaningful line; near the edge the peak is kept and flagged
    if q == 0 or (diverged and flag == "unstable") or height <= 1e-9 * n:
        w_meas = None
    rel = None if w_meas is None else abs(w_meas - w_pred) / w_pred
    return SecularResult(
        q_M=q,
        omega_predicted=w_pred,
        omega_measured=w_meas,
        rel_error=rel,
        stability_flag=flag,
        floquet_stable=bool(stable),
        diverged=diverged,
        times=tau / w_ac,
        x=x,
        freqs=freqs,
        spectrum=mag,
    )
