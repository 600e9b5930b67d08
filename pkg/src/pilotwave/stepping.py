"""Adaptive Dormand-Prince 5(4) stepping.

One tableau, shared by three drivers:

* integrate_array below, a generic driver for small numpy state vectors
  (used for the amplitude ODE cross-check);
* the specialized scalar trajectory loop in engine.py, which keeps the
  state in plain floats for speed;
* the batched ensemble loop in ensemble.py, which advances many
  trajectories with per-trajectory step sizes.

All three use the same embedded pair, the same RMS error norm with
scale atol + rtol*max(|y|, |y_new|), and the same PI step controller
(growth factor safety * err^-0.14 * err_prev^0.08, clipped to
[0.2, 5], capped at 1 right after a rejection).
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IntegrationError, ParameterError

# Dormand-Prince 5(4) coefficients.  The first-same-as-last property
# makes stage 7 of an accepted step reusable as stage 1 of the next.
C2 = 1.0 / 5.0
C3 = 3.0 / 10.0
C4 = 4.0 / 5.0
C5 = 8.0 / 9.0

A21 = 1.0 / 5.0
A31 = 3.0 / 40.0
A32 = 9.0 / 40.0
A41 = 44.0 / 45.0
A42 = -56.0 / 15.0
A43 = 32.0 / 9.0
A51 = 19372.0 / 6561.0
A52 = -25360.0 / 2187.0
A53 = 64448.0 / 6561.0
A54 = -212.0 / 729.0
A61 = 9017.0 / 3168.0
A62 = -355.0 / 33.0
A63 = 46732.0 / 5247.0
A64 = 49.0 / 176.0
A65 = -5103.0 / 18656.0

B1 = 35.0 / 384.0
B3 = 500.0 / 1113.0
B4 = 125.0 / 192.0
B5 = -2187.0 / 6784.0
B6 = 11.0 / 84.0

# Difference between the 5th- and 4th-order solutions.
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI controller exponents for a 5th-order error estimate.
PI_ALPHA = 0.7 / 5.0
PI_BETA = 0.4 / 5.0


def initial_step(f, t0, y0, k1, t_end, rtol, atol, max_step):
    """Starting step size from the standard two-evaluation heuristic."""
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((k1 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, abs(t_end - t0), max_step)
    y1 = y0 + h0 * k1
    k2 = np.asarray(f(t0 + h0, y1))
    d2 = float(np.sqrt(np.mean(((k2 - k1) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, abs(t_end - t0), max_step)


def integrate_array(
    f: Callable,
    t0: float,
    y0: np.ndarray,
    t_end: float,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_step: float = np.inf,
    min_step: float = 1e-12,
    stops: Optional[Sequence[float]] = None,
    observer: Optional[Callable] = None,
) -> tuple[float, np.ndarray, int, int]:
    """Advance y' = f(t, y) from t0 to t_end for a numpy state vector.

    The integrator lands exactly on every value in stops (which must be
    sorted, within [t0, t_end]) and calls observer(t, y) there, as well
    as at t0 if stops starts there.  Returns (t, y, accepted, rejected).
    """
    if t_end < t0:
        raise ParameterError("integrate_array requires t_end >= t0")
    t = float(t0)
    y = np.array(y0, dtype=float)

    stop_list = [] if stops is None else [float(s) for s in stops]
    for s in stop_list:
        if s < t0 or s > t_end:
            raise ParameterError("stop %r outside [%r, %r]" % (s, t0, t_end))
    stop_idx = 0
    if observer is not None and stop_list and stop_list[0] == t:
        observer(t, y)
        stop_idx = 1
    if t_end == t0:
        return t, y, 0, 0

    k1 = np.asarray(f(t, y))
    h = initial_step(f, t, y, k1, t_end, rtol, atol, max_step)
    err_prev = 1.0
    just_rejected = False
    n_acc = 0
    n_rej = 0

    while t < t_end:
        target = stop_list[stop_idx] if stop_idx < len(stop_list) else t_end
        if target <= t:
            stop_idx += 1
            continue
        h_try = min(h, max_step)
        hits_target = h_try >= target - t
        if hits_target:
            h_try = target - t
        if h_try < min_step:
            raise IntegrationError(
                "step size underflow at t=%r" % (t,), tau=t, state=tuple(y)
            )

        k2 = np.asarray(f(t + C2 * h_try, y + h_try * (A21 * k1)))
        k3 = np.asarray(f(t + C3 * h_try, y + h_try * (A31 * k1 + A32 * k2)))
        k4 = np.asarray(
            f(t + C4 * h_try, y + h_try * (A41 * k1 + A42 * k2 + A43 * k3))
        )
        k5 = np.asarray(
            f(t + C5 * h_try, y + h_try * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        )
        k6 = np.asarray(
            f(
                t + h_try,
                y + h_try * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
            )
        )
        y_new = y + h_try * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = np.asarray(f(t + h_try, y_new))

        err_vec = h_try * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if not np.isfinite(err):
            h = 0.5 * h_try
            just_rejected = True
            n_rej += 1
            continue
        if err <= 1.0:
            t = target if hits_target else t + h_try
            y = y_new
            k1 = k7
            n_acc += 1
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err ** (-PI_ALPHA) * err_prev**PI_BETA
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if just_rejected:
                factor = min(1.0, factor)
            h = h_try * factor
            err_prev = max(err, 1e-4)
            just_rejected = False
            if stop_idx < len(stop_list) and t >= stop_list[stop_idx]:
                if observer is not None:
                    observer(t, y)
                stop_idx += 1
        else:
            h = h_try * max(MIN_FACTOR, SAFETY * err ** (-PI_ALPHA))
            just_rejected = True
            n_rej += 1

    return t, y, n_acc, n_rej
